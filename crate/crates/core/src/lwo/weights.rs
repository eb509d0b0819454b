//! Weights file: `# key: value` metadata, then `weight <link_id> <int>`
//! per link, or `weight <link_id>/<from_router> <int>` per direction.

use crate::error::{Error, Result};
use crate::model::{strip_comment, Topology, WeightVector};

pub fn weights_to_text(t: &Topology, w: &WeightVector, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let g = t.graph();
    for l in t.links() {
        let (f, r) = (w.get(l.forward), w.get(l.reverse));
        if f == r {
            out.push_str(&format!("weight {} {f}\n", l.id));
        } else {
            out.push_str(&format!("weight {}/{} {f}\n", l.id, g.name(g.arc(l.forward).src)));
            out.push_str(&format!("weight {}/{} {r}\n", l.id, g.name(g.arc(l.reverse).src)));
        }
    }
    out
}

/// Starts from the topology's deployed weights and overrides every listed link.
pub fn parse_weights(text: &str, source_name: &str, t: &Topology) -> Result<WeightVector> {
    let g = t.graph();
    let mut w = t.deployed_weights().clone();
    for (i, raw) in text.lines().enumerate() {
        let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(source_name, i + 1, m);
        if fields.len() != 3 || fields[0] != "weight" {
            return Err(err(format!("expected `weight <link_id> <int>`, got `{}`", raw.trim())));
        }
        let value: u32 = fields[2].parse().map_err(|_| err(format!("bad weight `{}`", fields[2])))?;
        if value == 0 {
            return Err(err("weights must be at least 1".into()));
        }
        let (link_id, from) = match fields[1].split_once('/') {
            Some((l, f)) => (l, Some(f)),
            None => (fields[1], None),
        };
        let link = t.link(link_id).ok_or_else(|| err(format!("unknown link `{link_id}`")))?;
        match from {
            None => {
                w.set(link.forward, value);
                w.set(link.reverse, value);
            }
            Some(f) => {
                let arc = [link.forward, link.reverse]
                    .into_iter()
                    .find(|&a| g.name(g.arc(a).src) == f)
                    .ok_or_else(|| err(format!("link `{link_id}` has no direction leaving `{f}`")))?;
                w.set(arc, value);
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deployed_weights_round_trip() {
        let t = fixtures::toy_topology();
        let text = weights_to_text(&t, t.deployed_weights(), &[("seed".into(), "7".into())]);
        assert!(text.starts_with("# seed: 7\n"));
        assert_eq!(&parse_weights(&text, "w", &t).unwrap(), t.deployed_weights());
    }

    #[test]
    fn asymmetric_lines_name_the_direction() {
        let t = fixtures::toy_topology();
        let mut w = fixtures::toy_weights(&t, 2, 1, 1);
        w.set(t.link("R1R2").unwrap().reverse, 9);
        let text = weights_to_text(&t, &w, &[]);
        assert!(text.contains("weight R1R2/R1 2\n") && text.contains("weight R1R2/R2 9\n"), "{text}");
        assert_eq!(parse_weights(&text, "w", &t).unwrap(), w);
    }

    #[test]
    fn bad_lines_are_rejected() {
        let t = fixtures::toy_topology();
        assert!(parse_weights("weight NOPE 1\n", "w", &t).is_err());
        assert!(parse_weights("weight R1R2 0\n", "w", &t).is_err());
        assert!(parse_weights("weight R1R2/R3 4\n", "w", &t).is_err());
        let e = parse_weights("\nweight R1R2\n", "w.txt", &t).unwrap_err();
        assert!(e.to_string().starts_with("w.txt:2:"));
    }
}
