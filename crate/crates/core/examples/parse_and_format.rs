use highway_assert::dsl::{compile, format, parse};

const SRC: &str = r#"
const min_gap = 2.0m
assertion keep_gap {
  odd: two_lane_road
  type: invariant
  severity: safety
  condition: not present("vbp") or min_distance(box_of("av"), box_of("vbp")) >= min_gap
}
"#;

fn main() {
    let doc = parse(SRC).expect("parses");
    let text = format(&doc);
    println!("{text}");
    assert_eq!(parse(&text).unwrap().without_spans(), doc.without_spans());

    let defs = compile(SRC).unwrap();
    println!("compiled {} assertion(s): {}", defs.len(), defs[0].id);

    match compile("assertion broken { type: invariant condition: 1m + 2s > 0m }") {
        Ok(_) => println!("unexpectedly compiled"),
        Err(d) => println!("diagnostic: {d}"),
    }
}
