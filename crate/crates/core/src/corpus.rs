//! Synthetic benchmark: small integer algorithms in both languages, one
//! class per algorithm, with identifier renaming, loop-style variants and
//! shuffled declarations as intra-class noise.

use crate::ir::{Lang, Program, Value};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CLASS_NAMES: [&str; 10] = [
    "sum_range",
    "sum_squares",
    "factorial",
    "count_evens",
    "sum_evens",
    "max_digit",
    "digit_sum",
    "is_even",
    "gcd",
    "fibonacci",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LangMix {
    Java,
    Python,
    /// Alternate languages program by program.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub langs: LangMix,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { classes: 10, train_per_class: 50, test_per_class: 20, langs: LangMix::Both, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("classes must be between 2 and 10, got {0}")]
    ClassCount(usize),
    #[error("template for class {class} produced an unusable program: {message}")]
    Template { class: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub train: Vec<Program>,
    pub test: Vec<Program>,
}

/// Java and Python renderings of one algorithm variant. `$role`
/// placeholders are filled from name pools; consecutive lines starting
/// with `~` may be reordered.
struct Variant {
    java: &'static str,
    py: &'static str,
}

const SUM_RANGE: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $spare = 0;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        $acc = $acc + $i;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $spare = 0
    for $i in range(1, $n + 1):
        $acc = $acc + $i
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $i = $n;
    while ($i > 0) {
        $acc = $acc + $i;
        $i = $i - 1;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $i = $n
    while $i > 0:
        $acc = $acc + $i
        $i = $i - 1
    return $acc",
    },
];

const SUM_SQUARES: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
    int $acc = 0;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        $acc = $acc + $i * $i;
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 0
    for $i in range(1, $n + 1):
        $acc = $acc + $i * $i
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $spare = 1;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        $acc = $acc + $g($i);
    }
    return $acc;
}

int $g(int $a) {
    int $t = $a * $a;
    return $t;
}",
        py: "def $f($n):
~    $acc = 0
~    $spare = 1
    for $i in range(1, $n + 1):
        $acc = $acc + $g($i)
    return $acc

def $g($a):
    $t = $a * $a
    return $t",
    },
];

const FACTORIAL: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
    int $acc = 1;
    for (int $i = 2; $i <= $n; $i = $i + 1) {
        $acc = $acc * $i;
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 1
    for $i in range(2, $n + 1):
        $acc = $acc * $i
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 1;
~    int $i = $n;
    while ($i > 1) {
        $acc = $acc * $i;
        $i = $i - 1;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 1
~    $i = $n
    while $i > 1:
        $acc = $acc * $i
        $i = $i - 1
    return $acc",
    },
];

const COUNT_EVENS: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
    int $acc = 0;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        if ($i % 2 == 0) {
            $acc = $acc + 1;
        }
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 0
    for $i in range(1, $n + 1):
        if $i % 2 == 0:
            $acc = $acc + 1
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $spare = 2;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        $acc = $acc + $g($i);
    }
    return $acc;
}

int $g(int $a) {
    int $t = 0;
    if ($a % 2 == 0) {
        $t = 1;
    }
    return $t;
}",
        py: "def $f($n):
~    $acc = 0
~    $spare = 2
    for $i in range(1, $n + 1):
        $acc = $acc + $g($i)
    return $acc

def $g($a):
    $t = 0
    if $a % 2 == 0:
        $t = 1
    return $t",
    },
];

const SUM_EVENS: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
    int $acc = 0;
    for (int $i = 1; $i <= $n; $i = $i + 1) {
        if ($i % 2 == 0) {
            $acc = $acc + $i;
        }
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 0
    for $i in range(1, $n + 1):
        if $i % 2 == 0:
            $acc = $acc + $i
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $i = 0;
    while ($i <= $n) {
        $acc = $acc + $i;
        $i = $i + 2;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $i = 0
    while $i <= $n:
        $acc = $acc + $i
        $i = $i + 2
    return $acc",
    },
];

const MAX_DIGIT: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $t = $n;
    while ($t > 0) {
        int $d = $t % 10;
        if ($d > $acc) {
            $acc = $d;
        }
        $t = $t / 10;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $t = $n
    while $t > 0:
        $d = $t % 10
        if $d > $acc:
            $acc = $d
        $t = $t // 10
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
    int $acc = 0;
    while ($n > 0) {
        if ($n % 10 > $acc) {
            $acc = $n % 10;
        }
        $n = $n / 10;
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 0
    while $n > 0:
        if $n % 10 > $acc:
            $acc = $n % 10
        $n = $n // 10
    return $acc",
    },
];

const DIGIT_SUM: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $t = $n;
    while ($t > 0) {
        $acc = $acc + $t % 10;
        $t = $t / 10;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $t = $n
    while $t > 0:
        $acc = $acc + $t % 10
        $t = $t // 10
    return $acc",
    },
    Variant {
        java: "int $f(int $n) {
    int $acc = 0;
    while ($n > 0) {
        int $d = $n % 10;
        $acc = $acc + $d;
        $n = $n / 10;
    }
    return $acc;
}",
        py: "def $f($n):
    $acc = 0
    while $n > 0:
        $d = $n % 10
        $acc = $acc + $d
        $n = $n // 10
    return $acc",
    },
];

const IS_EVEN: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
    if ($n % 2 == 0) {
        return 1;
    }
    return 0;
}",
        py: "def $f($n):
    if $n % 2 == 0:
        return 1
    return 0",
    },
    Variant {
        java: "int $f(int $n) {
~    int $acc = 0;
~    int $t = $n % 2;
    if ($t == 0) {
        $acc = 1;
    } else {
        $acc = 0;
    }
    return $acc;
}",
        py: "def $f($n):
~    $acc = 0
~    $t = $n % 2
    if $t == 0:
        $acc = 1
    else:
        $acc = 0
    return $acc",
    },
];

const GCD: &[Variant] = &[
    Variant {
        java: "int $f(int $a, int $b) {
    while ($b != 0) {
        int $t = $b;
        $b = $a % $b;
        $a = $t;
    }
    return $a;
}",
        py: "def $f($a, $b):
    while $b != 0:
        $t = $b
        $b = $a % $b
        $a = $t
    return $a",
    },
    Variant {
        java: "int $f(int $a, int $b) {
    while ($a != $b) {
        if ($a > $b) {
            $a = $a - $b;
        } else {
            $b = $b - $a;
        }
    }
    return $a;
}",
        py: "def $f($a, $b):
    while $a != $b:
        if $a > $b:
            $a = $a - $b
        else:
            $b = $b - $a
    return $a",
    },
];

const FIBONACCI: &[Variant] = &[
    Variant {
        java: "int $f(int $n) {
~    int $a = 0;
~    int $b = 1;
    for (int $i = 0; $i < $n; $i = $i + 1) {
        int $t = $a + $b;
        $a = $b;
        $b = $t;
    }
    return $a;
}",
        py: "def $f($n):
~    $a = 0
~    $b = 1
    for $i in range($n):
        $t = $a + $b
        $a = $b
        $b = $t
    return $a",
    },
    Variant {
        java: "int $f(int $n) {
~    int $a = 0;
~    int $b = 1;
~    int $i = 0;
    while ($i < $n) {
        $b = $a + $b;
        $a = $b - $a;
        $i = $i + 1;
    }
    return $a;
}",
        py: "def $f($n):
~    $a = 0
~    $b = 1
~    $i = 0
    while $i < $n:
        $b = $a + $b
        $a = $b - $a
        $i = $i + 1
    return $a",
    },
];

const TEMPLATES: [&[Variant]; 10] =
    [SUM_RANGE, SUM_SQUARES, FACTORIAL, COUNT_EVENS, SUM_EVENS, MAX_DIGIT, DIGIT_SUM, IS_EVEN, GCD, FIBONACCI];

// Disjoint pools so no two roles can receive the same name.
const POOLS: &[(&str, &[&str])] = &[
    ("$f", &["solve", "compute", "run", "calc", "process", "evaluate", "work", "answer"]),
    ("$g", &["helper", "part", "piece", "unit", "term"]),
    ("$n", &["n", "num", "limit", "size", "bound", "x"]),
    ("$acc", &["total", "result", "acc", "sum", "res", "value", "count", "out"]),
    ("$i", &["i", "j", "k", "idx", "index", "pos"]),
    ("$t", &["tmp", "temp", "t", "aux", "rest", "cur"]),
    ("$d", &["d", "digit", "last", "low"]),
    ("$a", &["a", "p", "first", "prev", "lo"]),
    ("$b", &["b", "q", "second", "nxt", "hi"]),
    ("$spare", &["flag", "spare", "extra", "mark"]),
];

fn instantiate(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut group: Vec<String> = Vec::new();
    for line in template.lines() {
        if let Some(rest) = line.strip_prefix('~') {
            group.push(rest.to_string());
            continue;
        }
        if !group.is_empty() {
            group.shuffle(rng);
            lines.append(&mut group);
        }
        lines.push(line.to_string());
    }
    let mut text = lines.join("\n");
    text.push('\n');
    // Longest placeholders first so `$a` does not clobber `$acc`.
    let mut pools: Vec<&(&str, &[&str])> = POOLS.iter().collect();
    pools.sort_by_key(|(k, _)| std::cmp::Reverse(k.len()));
    for (key, names) in pools {
        let name = names.choose(rng).expect("non-empty pool");
        text = text.replace(key, name);
    }
    text
}

fn inputs(class: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Value>> {
    let mut seen = Vec::new();
    while seen.len() < 5 {
        let args = if CLASS_NAMES[class] == "gcd" {
            vec![Value::Int(rng.random_range(1..60)), Value::Int(rng.random_range(1..60))]
        } else if CLASS_NAMES[class] == "max_digit" || CLASS_NAMES[class] == "digit_sum" {
            vec![Value::Int(rng.random_range(0..100_000))]
        } else {
            vec![Value::Int(rng.random_range(0..13))]
        };
        if !seen.contains(&args) {
            seen.push(args);
        }
    }
    seen
}

/// One program of `class`, with five recorded io pairs.
pub fn generate_program(class: usize, lang: Lang, id: String, rng: &mut ChaCha8Rng) -> Result<Program, CorpusError> {
    let variant = TEMPLATES[class].choose(rng).expect("non-empty variants");
    let template = match lang {
        Lang::JavaLite => variant.java,
        Lang::PyLite => variant.py,
    };
    let mut program = Program { id, lang, content: instantiate(template, rng), label: class, io_pairs: vec![] };
    program
        .record_io(&inputs(class, rng))
        .map_err(|e| CorpusError::Template { class, message: e.to_string() })?;
    Ok(program)
}

/// Train and test splits with disjoint ids and dense labels
/// `0..classes`. Programs are interleaved by class.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Corpus, CorpusError> {
    if !(2..=CLASS_NAMES.len()).contains(&cfg.classes) {
        return Err(CorpusError::ClassCount(cfg.classes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut split = |name: &str, per_class: usize| -> Result<Vec<Program>, CorpusError> {
        let mut out = Vec::with_capacity(per_class * cfg.classes);
        for k in 0..per_class {
            for class in 0..cfg.classes {
                let lang = match cfg.langs {
                    LangMix::Java => Lang::JavaLite,
                    LangMix::Python => Lang::PyLite,
                    LangMix::Both if (k + class) % 2 == 0 => Lang::JavaLite,
                    LangMix::Both => Lang::PyLite,
                };
                let id = format!("{name}-{}-{k:04}", CLASS_NAMES[class]);
                out.push(generate_program(class, lang, id, &mut rng)?);
            }
        }
        Ok(out)
    };
    let train = split("train", cfg.train_per_class)?;
    let test = split("test", cfg.test_per_class)?;
    Ok(Corpus { train, test })
}
