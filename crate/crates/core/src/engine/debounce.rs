use super::{Outcome, Verdict};
use std::collections::{BTreeMap, HashMap, VecDeque};

/// Suppress result blips shorter than `n` consecutive verdicts, per assertion.
///
/// The first run of an assertion is published as is. A later run with a
/// different result is published only if it lasts at least `n` verdicts;
/// shorter runs are relabelled to the published result and keep the raw
/// result in `detail["raw_result"]`. Applying it twice changes nothing.
pub fn debounce(verdicts: &[Verdict], n: usize) -> Vec<Verdict> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, v) in verdicts.iter().enumerate() {
        groups.entry(v.assertion_id.as_str()).or_default().push(i);
    }
    let mut out = verdicts.to_vec();
    for idx in groups.values() {
        let mut published: Option<Outcome> = None;
        let mut k = 0;
        while k < idx.len() {
            let r = verdicts[idx[k]].result;
            let mut end = k;
            while end < idx.len() && verdicts[idx[end]].result == r {
                end += 1;
            }
            match published {
                Some(p) if p != r && end - k < n => {
                    for &i in &idx[k..end] {
                        relabel(&mut out[i], p);
                    }
                }
                _ => published = Some(r),
            }
            k = end;
        }
    }
    out
}

fn relabel(v: &mut Verdict, to: Outcome) {
    let raw = serde_json::to_value(v.result).expect("outcome serialises");
    v.detail.entry("raw_result".into()).or_insert(raw);
    v.result = to;
}

#[derive(Debug, Default)]
struct Track {
    published: Option<Outcome>,
    held: VecDeque<Verdict>,
}

/// Streaming form of [`debounce`]. Holds back at most `n - 1` verdicts per
/// assertion while a new run is still shorter than `n`.
#[derive(Debug)]
pub struct Debouncer {
    n: usize,
    tracks: HashMap<String, Track>,
}

impl Debouncer {
    pub fn new(n: usize) -> Debouncer {
        Debouncer { n, tracks: HashMap::new() }
    }

    pub fn push(&mut self, v: Verdict) -> Vec<Verdict> {
        let n = self.n;
        let tr = self.tracks.entry(v.assertion_id.clone()).or_default();
        let Some(p) = tr.published else {
            tr.published = Some(v.result);
            return vec![v];
        };
        if v.result == p {
            let mut out: Vec<Verdict> = tr.held.drain(..).collect();
            out.iter_mut().for_each(|h| relabel(h, p));
            out.push(v);
            return out;
        }
        if tr.held.front().is_some_and(|h| h.result != v.result) {
            // A third result interrupts the held run, which was too short.
            let mut out: Vec<Verdict> = tr.held.drain(..).collect();
            out.iter_mut().for_each(|h| relabel(h, p));
            out.extend(self.push(v));
            return out;
        }
        tr.held.push_back(v);
        if tr.held.len() >= n {
            tr.published = tr.held.front().map(|h| h.result);
            return tr.held.drain(..).collect();
        }
        Vec::new()
    }

    /// Release held verdicts at end of input; an unfinished run was too short.
    pub fn finish(&mut self) -> Vec<Verdict> {
        let mut out = Vec::new();
        for tr in self.tracks.values_mut() {
            if let Some(p) = tr.published {
                for mut h in tr.held.drain(..) {
                    relabel(&mut h, p);
                    out.push(h);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rs: &[Outcome]) -> Vec<Verdict> {
        rs.iter()
            .enumerate()
            .map(|(i, &r)| Verdict { assertion_id: "a".into(), t: i as f64, result: r, detail: Default::default() })
            .collect()
    }

    use Outcome::{Fail as F, Pass as P};

    #[test]
    fn short_blip_suppressed() {
        let out = debounce(&seq(&[P, P, F, P, P, F, F, F, P]), 3);
        let rs: Vec<Outcome> = out.iter().map(|v| v.result).collect();
        assert_eq!(rs, vec![P, P, P, P, P, F, F, F, F]);
        assert_eq!(out[2].detail["raw_result"], "fail");
    }

    #[test]
    fn idempotent_and_streaming_agrees() {
        let input = seq(&[F, P, F, F, P, P, P, F, P, P, F, F, F]);
        let once = debounce(&input, 2);
        assert_eq!(debounce(&once, 2), once);
        let mut d = Debouncer::new(2);
        let mut got: Vec<Verdict> = input.into_iter().flat_map(|v| d.push(v)).collect();
        got.extend(d.finish());
        got.sort_by(|a, b| a.t.total_cmp(&b.t));
        assert_eq!(got, once);
    }
}
