//! Random, syntactically valid rule documents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUNCS: &[&str] = &["box_of", "overlaps", "min_distance", "speed_of", "sda", "abs", "max", "present", "foo"];
const NAMES: &[&str] = &["gap", "limit", "x_1", "_w"];
const UNITS: &[&str] = &["", "m", "s", "ms", "mps", "mph", "rad"];
const OPS: &[(&str, u8)] = &[
    ("or", 1),
    ("and", 2),
    ("<", 3),
    ("<=", 3),
    (">", 3),
    (">=", 3),
    ("==", 3),
    ("!=", 3),
    ("+", 4),
    ("-", 4),
    ("*", 5),
    ("/", 5),
];

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs[self.rng.random_range(0..xs.len())]
    }

    fn space(&mut self) -> &'static str {
        [" ", " ", "  ", "\n    "][self.rng.random_range(0..4)]
    }

    /// Returns source text and the binding strength of its outermost operator.
    fn expr(&mut self, depth: u32) -> (String, u8) {
        let choice = if depth == 0 { 0 } else { self.rng.random_range(0..6) };
        match choice {
            0 | 1 => (self.atom(), 7),
            2 => {
                let (inner, p) = self.expr(depth - 1);
                let inner = if p < 6 { format!("({inner})") } else { inner };
                if self.rng.random_bool(0.5) {
                    (format!("not {inner}"), 6)
                } else {
                    (format!("-{inner}"), 6)
                }
            }
            3 => {
                let f = self.pick(FUNCS);
                let n = self.rng.random_range(0..4);
                let args: Vec<String> = (0..n).map(|_| self.expr(depth - 1).0).collect();
                (format!("{f}({})", args.join(", ")), 7)
            }
            4 => (format!("({})", self.expr(depth - 1).0), 7),
            _ => {
                let (op, p) = OPS[self.rng.random_range(0..OPS.len())];
                let side = |g: &mut Gen| {
                    let (s, cp) = g.expr(depth - 1);
                    if cp < p || (cp == p && p == 3) {
                        format!("({s})")
                    } else {
                        s
                    }
                };
                let (l, r) = (side(self), side(self));
                let sp = self.space();
                (format!("{l}{sp}{op} {r}"), p)
            }
        }
    }

    fn atom(&mut self) -> String {
        match self.rng.random_range(0..5) {
            0 => {
                let v = self.rng.random_range(0..4000) as f64 / 8.0;
                format!("{v}{}", self.pick(UNITS))
            }
            1 => format!("\"{}\"", self.pick(&["av", "vbp", "o\\\"v", "a\\\\b", "running"])),
            2 => self.pick(NAMES).to_string(),
            3 => self.pick(&["true", "false"]).to_string(),
            _ => format!("{}()", self.pick(&["sda", "time", "cut_in_clearance"])),
        }
    }

    fn assertion(&mut self, i: usize) -> String {
        let kind = self.pick(&[
            "invariant",
            "execution",
            "precondition temporal",
            "precondition physical",
            "postcondition temporal",
            "postcondition physical",
        ]);
        let mut fields = vec![
            format!("odd: {}", ["road", "road, dry", "a,b,c"][self.rng.random_range(0..3)]),
            format!("type: {kind}"),
            format!("condition: {}", self.expr(4).0),
        ];
        if kind.contains(' ') || self.rng.random_bool(0.2) {
            let dur = self.pick(&["2s", "500ms", "duration 1.5s", "0.25s"]);
            fields.push(format!("{}: {dur}", self.pick(&["window", "offset"])));
        }
        if self.rng.random_bool(0.6) {
            fields.push(format!("reference: {}", self.expr(3).0));
        }
        if self.rng.random_bool(0.5) {
            fields.push(format!("mode: {}", self.pick(&["first", "all"])));
        }
        if self.rng.random_bool(0.5) {
            fields.push(format!("severity: {}", self.pick(&["safety", "performance"])));
        }
        for k in (1..fields.len()).rev() {
            let j = self.rng.random_range(0..=k);
            fields.swap(k, j);
        }
        format!("assertion a{i} {{\n  {}\n}}\n", fields.join("\n  "))
    }

    fn document(&mut self) -> String {
        let mut out = String::from("// generated\n");
        for _ in 0..self.rng.random_range(0..3) {
            let name = self.pick(NAMES);
            let e = self.expr(2).0;
            let semi = if self.rng.random_bool(0.5) { ";" } else { "" };
            out += &format!("const {name} = {e}{semi}\n");
        }
        for i in 0..self.rng.random_range(1..4) {
            out += &self.assertion(i);
        }
        out
    }
}

/// A syntactically valid rule document; types and names are random.
pub fn doc(seed: u64) -> String {
    Gen { rng: ChaCha8Rng::seed_from_u64(seed) }.document()
}
