mod common;

use common::dslgen::doc;
use highway_assert::dsl::{compile, format, parse};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn format_round_trips(seed in any::<u64>()) {
        let src = doc(seed);
        let parsed = parse(&src).map_err(|d| TestCaseError::fail(format!("{d}\n{src}")))?;
        let printed = format(&parsed);
        let again = parse(&printed).map_err(|d| TestCaseError::fail(format!("{d}\n{printed}")))?;
        prop_assert_eq!(parsed.without_spans(), again.without_spans());
        prop_assert_eq!(format(&again), printed);
        // Compilation does not depend on layout either.
        match (compile(&src), compile(&format(&parsed))) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "compile differs: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn mutated_sources_give_located_diagnostics(seed in any::<u64>(), pos in any::<prop::sample::Index>(), op in 0usize..3, ch in prop::sample::select(vec!['{', '}', '(', ')', '@', ':', ',', '"', '<', '=', '#', '9'])) {
        let src = doc(seed);
        let chars: Vec<char> = src.chars().collect();
        let at = pos.index(chars.len());
        let mutated: String = match op {
            0 => chars.iter().enumerate().filter(|&(i, _)| i != at).map(|(_, c)| *c).collect(),
            1 => chars[..at].iter().chain(std::iter::once(&ch)).chain(&chars[at..]).collect(),
            _ => chars[..at].iter().collect(),
        };
        let lines = mutated.lines().count().max(1);
        for result in [parse(&mutated).map(|_| ()), compile(&mutated).map(|_| ())] {
            if let Err(d) = result {
                prop_assert!(d.line >= 1 && d.line <= lines + 1, "line {} of {}", d.line, lines);
                prop_assert!(d.column >= 1);
                if d.line <= lines {
                    let width = mutated.lines().nth(d.line - 1).unwrap_or("").chars().count();
                    prop_assert!(d.column <= width + 1, "column {} past {} in {:?}", d.column, width, mutated);
                }
                prop_assert!(!d.message.is_empty());
            }
        }
    }
}

#[test]
fn diagnostics_point_at_the_offending_token() {
    let cases = [
        ("assertion a {\n  odd: road\n  type: sideways\n}", 3, 9),
        ("assertion a {\n  odd: road\n  type: invariant\n  condition: 1m < 2m < 3m\n}", 4, 22),
        ("const x = 3kg", 1, 11),
        ("assertion a { odd: r type: invariant condition: \"av }", 1, 49),
        ("assertion a { odd: r type: invariant condition: 1m + 2s > 0m }", 1, 49),
        ("assertion a { odd: r type: invariant condition: overlapz(box_of(\"av\"), box_of(\"ov\")) }", 1, 49),
        ("assertion a { odd: r type: invariant condition: true\n odd: r }", 2, 2),
    ];
    for (src, line, col) in cases {
        let d = compile(src).unwrap_err();
        assert_eq!((d.line, d.column), (line, col), "{src}: {d}");
    }
}

#[test]
fn unknown_function_suggests_a_builtin() {
    let d = compile("assertion a { odd: r type: invariant condition: overlapz(box_of(\"av\"), box_of(\"ov\")) }")
        .unwrap_err();
    assert!(d.to_string().contains("overlaps"), "{d}");
}
