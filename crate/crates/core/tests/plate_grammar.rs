//! Plate normalization against a regex oracle over a fuzz corpus.

use crowdtrace_core::registry::{normalize_plate, PlateGrammar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

struct Oracle {
    letters: Regex,
    digits: Regex,
    runs: Regex,
    canonical: Regex,
}

impl Oracle {
    fn new() -> Self {
        Self {
            letters: Regex::new(r"^[A-Z0158]{2,3}$").unwrap(),
            digits: Regex::new(r"^[0-9OIBS]{1,4}$").unwrap(),
            runs: Regex::new(r"[0-9]+|[A-Z]+").unwrap(),
            canonical: Regex::new(r"^[A-Z0158]{2,3}-[0-9OIBS]{1,4}$").unwrap(),
        }
    }

    /// Expected canonical form for `L{2,3}-D{1,4}`, or `None` when invalid.
    fn expect(&self, raw: &str) -> Option<String> {
        if raw
            .chars()
            .any(|c| !(c.is_ascii_alphanumeric() || c.is_whitespace() || c.is_ascii_punctuation()))
        {
            return None;
        }
        let upper = raw.to_ascii_uppercase();
        let mut groups: Vec<String> = upper
            .split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
            .filter(|g| !g.is_empty())
            .map(str::to_owned)
            .collect();
        if groups.len() == 1 {
            groups = self.runs.find_iter(&groups[0]).map(|m| m.as_str().to_owned()).collect();
        }
        match groups.as_slice() {
            [l, d] if self.letters.is_match(l) && self.digits.is_match(d) => Some(format!("{l}-{d}")),
            _ => None,
        }
    }
}

fn fuzz_string(rng: &mut ChaCha8Rng) -> String {
    const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    const DIGITS: &[u8] = b"0123456789";
    const SEPS: &[&str] = &[" ", "-", "  ", ".", "_", "/", "\t"];
    const WILD: &[&str] = &["é", "Ö", "中", "١", "\u{a0}", "*", "#"];
    let block = |rng: &mut ChaCha8Rng, pool: &[u8], max: usize| -> String {
        (0..rng.random_range(0..=max))
            .map(|_| pool[rng.random_range(0..pool.len())] as char)
            .collect()
    };
    let mut s = String::new();
    match rng.random_range(0..6) {
        0 => {
            // Free-for-all.
            for _ in 0..rng.random_range(0..10) {
                let pick = rng.random_range(0..4);
                s.push_str(&match pick {
                    0 => block(rng, LETTERS, 2),
                    1 => block(rng, DIGITS, 2),
                    2 => SEPS[rng.random_range(0..SEPS.len())].to_owned(),
                    _ => WILD[rng.random_range(0..WILD.len())].to_owned(),
                });
            }
        }
        1 => {
            s.push_str(&block(rng, LETTERS, 4));
            s.push_str(&block(rng, DIGITS, 5));
        }
        2 => {
            s.push_str(&block(rng, b"ABO0I1S5B8", 4));
            s.push_str(SEPS[rng.random_range(0..SEPS.len())]);
            s.push_str(&block(rng, b"0123OIBS58", 5));
        }
        _ => {
            if rng.random_bool(0.2) {
                s.push(' ');
            }
            s.push_str(&block(rng, LETTERS, 4));
            s.push_str(SEPS[rng.random_range(0..SEPS.len())]);
            s.push_str(&block(rng, DIGITS, 5));
            if rng.random_bool(0.1) {
                s.push_str(SEPS[rng.random_range(0..SEPS.len())]);
                s.push_str(&block(rng, LETTERS, 2));
            }
        }
    }
    s
}

#[test]
fn normalize_agrees_with_regex_oracle() {
    let oracle = Oracle::new();
    let grammar = PlateGrammar::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut ok, mut err) = (0, 0);
    for _ in 0..1000 {
        let raw = fuzz_string(&mut rng);
        let got = grammar.normalize(&raw).ok().map(|p| p.as_str().to_owned());
        assert_eq!(got, oracle.expect(&raw), "input {raw:?}");
        match got {
            Some(p) => {
                assert!(oracle.canonical.is_match(&p));
                assert_eq!(normalize_plate(&p).unwrap().as_str(), p, "not idempotent: {p}");
                ok += 1;
            }
            None => err += 1,
        }
    }
    // The corpus must exercise both outcomes.
    assert!(ok > 200 && err > 200, "ok={ok} err={err}");
}

#[test]
fn documented_examples() {
    assert_eq!(normalize_plate("abc 123").unwrap().as_str(), "ABC-123");
    assert_eq!(normalize_plate("ab0 123").unwrap().as_str(), "AB0-123");
    assert!(normalize_plate("12-ABCDE").is_err());
    assert!(normalize_plate("").is_err());
}
