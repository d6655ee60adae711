//! Seeded generator for small English treebanks and a matching gloss
//! dictionary. Trees carry function tags, coindexation and empty elements
//! so the reader's normalization is exercised end to end.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::translator::{Category, GlossDictionary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub sentences: usize,
    pub seed: u64,
    /// Maximum clause embedding depth.
    pub max_depth: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            sentences: 400,
            seed: 7,
            max_depth: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// One bracketed tree per line.
    pub bracketed: String,
    pub dictionary: GlossDictionary,
}

const PRONOUNS: &[(&str, &str)] = &[
    ("I", "watashi wa"),
    ("you", "anata wa"),
    ("he", "kare wa"),
    ("she", "kanojo wa"),
    ("we", "watashitachi wa"),
    ("they", "karera wa"),
];
const DETERMINERS: &[(&str, &str)] = &[("the", ""), ("a", ""), ("this", "kono"), ("that", "ano")];
const ADJECTIVES: &[(&str, &str)] = &[
    ("red", "akai"),
    ("big", "ookii"),
    ("old", "furui"),
    ("new", "atarashii"),
    ("small", "chiisai"),
];
const NOUNS: &[(&str, &str)] = &[
    ("pen", "pen"),
    ("book", "hon"),
    ("teacher", "sensei"),
    ("student", "gakusei"),
    ("dog", "inu"),
    ("cat", "neko"),
    ("car", "kuruma"),
    ("letter", "tegami"),
    ("house", "ie"),
    ("park", "kouen"),
    ("school", "gakkou"),
    ("friend", "tomodachi"),
    ("song", "uta"),
    ("station", "eki"),
];
const NAMES: &[(&str, &str)] = &[("Tokyo", "toukyou"), ("Mary", "meari"), ("John", "jon"), ("Kyoto", "kyouto")];
const TRANSITIVE: &[(&str, &str)] = &[
    ("bought", "katta"),
    ("saw", "mita"),
    ("wrote", "kaita"),
    ("found", "mitsuketa"),
    ("liked", "sukidatta"),
    ("visited", "otozureta"),
    ("made", "tsukutta"),
];
const CLAUSAL: &[(&str, &str)] = &[("said", "itta"), ("thought", "omotta"), ("knew", "shitteita")];
const CONTROL: &[(&str, &str)] = &[("wanted", "hoshikatta"), ("tried", "tameshita")];
const MODALS: &[(&str, &str)] = &[("can", "dekiru"), ("will", "darou"), ("must", "nebanaranai")];
const BASE_VERBS: &[(&str, &str)] = &[
    ("buy", "kau"),
    ("see", "miru"),
    ("write", "kaku"),
    ("find", "mitsukeru"),
    ("visit", "otozureru"),
    ("make", "tsukuru"),
];
const PREPOSITIONS: &[(&str, &str, &str)] = &[
    ("in", "de", "LOC"),
    ("near", "no chikaku de", "LOC"),
    ("with", "to", "CLR"),
    ("from", "kara", "DIR"),
    ("for", "no tame ni", "PRP"),
];
const SUBORDINATORS: &[(&str, &str)] = &[("because", "node"), ("when", "toki"), ("if", "nara")];
const ADVERBS: &[(&str, &str)] = &[("quickly", "hayaku"), ("yesterday", "kinou"), ("often", "yoku")];
const INFINITIVAL: (&str, &str) = ("to", "");
const PERIOD: (&str, &str) = (".", ".");

/// Gloss dictionary covering every word the generator can emit.
pub fn synth_dictionary() -> GlossDictionary {
    let mut dict = GlossDictionary::new();
    let mut add = |entries: &[(&str, &str)], cat: Category| {
        for (word, gloss) in entries {
            let gloss: Vec<&str> = gloss.split_whitespace().collect();
            dict.insert(*word, cat, &gloss);
        }
    };
    for others in [PRONOUNS, DETERMINERS, ADJECTIVES, NOUNS, NAMES, SUBORDINATORS, ADVERBS] {
        add(others, Category::Other);
    }
    add(&[INFINITIVAL], Category::Other);
    for verbs in [TRANSITIVE, CLAUSAL, CONTROL, MODALS, BASE_VERBS] {
        add(verbs, Category::Verb);
    }
    add(&[PERIOD], Category::Punct);
    let preps: Vec<(&str, &str)> = PREPOSITIONS.iter().map(|(w, g, _)| (*w, *g)).collect();
    add(&preps, Category::Other);
    dict
}

enum Node {
    Leaf(String, String),
    Phrase(String, Vec<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf(label, word) => write!(f, "({label} {word})"),
            Node::Phrase(label, children) => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn leaf(label: &str, word: &str) -> Node {
    Node::Leaf(label.to_owned(), word.to_owned())
}

fn phrase(label: impl Into<String>, children: Vec<Node>) -> Node {
    Node::Phrase(label.into(), children)
}

struct Generator {
    rng: ChaCha8Rng,
    max_depth: usize,
    next_index: usize,
}

impl Generator {
    fn pick<'a>(&mut self, items: &'a [(&'a str, &'a str)]) -> &'a str {
        items.choose(&mut self.rng).expect("non-empty vocabulary").0
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn index(&mut self) -> usize {
        self.next_index += 1;
        self.next_index
    }

    fn base_np(&mut self, label: &str) -> Node {
        let r: f64 = self.rng.random();
        if r < 0.15 {
            let name = self.pick(NAMES);
            phrase(label, vec![leaf("NNP", name)])
        } else if r < 0.40 {
            let det = self.pick(DETERMINERS);
            let adj = self.pick(ADJECTIVES);
            let noun = self.pick(NOUNS);
            phrase(label, vec![leaf("DT", det), leaf("JJ", adj), leaf("NN", noun)])
        } else {
            let det = self.pick(DETERMINERS);
            let noun = self.pick(NOUNS);
            phrase(label, vec![leaf("DT", det), leaf("NN", noun)])
        }
    }

    fn np(&mut self, label: &str, depth: usize) -> Node {
        if depth < self.max_depth && self.coin(0.15) {
            let head = self.base_np("NP");
            let pp = self.pp(depth + 1);
            phrase(label, vec![head, pp])
        } else {
            self.base_np(label)
        }
    }

    fn subject(&mut self, depth: usize) -> Node {
        let label = if self.coin(0.2) {
            format!("NP-SBJ-{}", self.index())
        } else {
            "NP-SBJ".to_owned()
        };
        if self.coin(0.4) {
            let p = self.pick(PRONOUNS);
            phrase(label, vec![leaf("PRP", p)])
        } else {
            self.np(&label, depth)
        }
    }

    fn pp(&mut self, depth: usize) -> Node {
        let (prep, _, tag) = *PREPOSITIONS.choose(&mut self.rng).expect("prepositions");
        let label = if self.coin(0.5) {
            format!("PP-{tag}")
        } else {
            "PP".to_owned()
        };
        let obj = self.np("NP", depth);
        phrase(label, vec![leaf("IN", prep), obj])
    }

    fn object_tail(&mut self, depth: usize) -> Vec<Node> {
        let mut out = vec![self.np("NP", depth)];
        if self.coin(0.25) {
            out.push(self.pp(depth));
        }
        if self.coin(0.15) {
            let adv = self.pick(ADVERBS);
            let label = if self.coin(0.5) { "ADVP-TMP" } else { "ADVP" };
            out.push(phrase(label, vec![leaf("RB", adv)]));
        }
        out
    }

    fn vp(&mut self, depth: usize) -> Node {
        let embed = depth < self.max_depth;
        let r: f64 = self.rng.random();
        if r < 0.40 || (!embed && r < 0.75) {
            let verb = self.pick(TRANSITIVE);
            let mut kids = vec![leaf("VBD", verb)];
            kids.extend(self.object_tail(depth));
            phrase("VP", kids)
        } else if r < 0.55 || !embed {
            let modal = self.pick(MODALS);
            let verb = self.pick(BASE_VERBS);
            let mut inner = vec![leaf("VB", verb)];
            inner.extend(self.object_tail(depth));
            phrase("VP", vec![leaf("MD", modal), phrase("VP", inner)])
        } else if r < 0.70 {
            let verb = self.pick(CLAUSAL);
            let clause = self.clause(depth + 1);
            let sbar = phrase("SBAR", vec![leaf("-NONE-", "0"), clause]);
            phrase("VP", vec![leaf("VBD", verb), sbar])
        } else if r < 0.85 {
            let verb = self.pick(CONTROL);
            let base = self.pick(BASE_VERBS);
            let mut inner = vec![leaf("VB", base)];
            inner.extend(self.object_tail(depth + 1));
            let trace = format!("*-{}", self.index());
            let inf = phrase(
                "S",
                vec![
                    phrase("NP-SBJ", vec![leaf("-NONE-", &trace)]),
                    phrase("VP", vec![leaf("TO", INFINITIVAL.0), phrase("VP", inner)]),
                ],
            );
            phrase("VP", vec![leaf("VBD", verb), inf])
        } else {
            let verb = self.pick(TRANSITIVE);
            let obj = self.np("NP", depth);
            let sub = self.pick(SUBORDINATORS);
            let clause = self.clause(depth + 1);
            let sbar = phrase("SBAR-ADV", vec![leaf("IN", sub), clause]);
            phrase("VP", vec![leaf("VBD", verb), obj, sbar])
        }
    }

    fn clause(&mut self, depth: usize) -> Node {
        let subj = self.subject(depth);
        let vp = self.vp(depth);
        phrase("S", vec![subj, vp])
    }

    fn sentence(&mut self) -> Node {
        let Node::Phrase(label, mut kids) = self.clause(0) else {
            unreachable!("clauses are phrases")
        };
        kids.push(leaf(".", PERIOD.0));
        phrase(label, kids)
    }
}

/// Generates `opts.sentences` trees, wrapped in an unlabeled root bracket
/// every third sentence the way some treebank dumps do.
pub fn synth_corpus(opts: &SynthOptions) -> SynthCorpus {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        max_depth: opts.max_depth,
        next_index: 0,
    };
    let mut bracketed = String::new();
    for n in 0..opts.sentences {
        let tree = gen.sentence();
        if n % 3 == 0 {
            bracketed.push_str(&format!("( {tree} )\n"));
        } else {
            bracketed.push_str(&format!("{tree}\n"));
        }
    }
    SynthCorpus {
        bracketed,
        dictionary: synth_dictionary(),
    }
}
