//! Plain-text tree format: one vertex per line in preorder,
//!
//! ```text
//! id parent length pointed mark
//! 0 - 0.0000000000000000e0 - 1
//! 1 0 1.0000000000000000e0 1,2 0
//! ```
//!
//! `parent` and `pointed` use `-` when empty, `mark` is `1`, `0` or `-` for an
//! unmarked tree. Lines starting with `#` are ignored.

use super::PointedTree;
use crate::error::{Error, Result};
use std::fmt::Write;

pub fn to_text(t: &PointedTree) -> String {
    let order = t.preorder();
    let mut id = vec![0; t.vertex_count()];
    for (k, &v) in order.iter().enumerate() {
        id[v] = k;
    }
    let mut labels = vec![Vec::new(); t.vertex_count()];
    for (i, &v) in t.pointed().iter().enumerate().skip(1) {
        labels[v].push(i.to_string());
    }
    let mut out = String::new();
    for &v in &order {
        let parent = if v == 0 {
            "-".to_string()
        } else {
            id[t.parent(v)].to_string()
        };
        let pointed = if labels[v].is_empty() {
            "-".to_string()
        } else {
            labels[v].join(",")
        };
        let mark = match t.marks() {
            None => "-",
            Some(m) if m[v] => "1",
            Some(_) => "0",
        };
        writeln!(
            out,
            "{} {} {:.16e} {} {}",
            id[v],
            parent,
            t.edge_len(v),
            pointed,
            mark
        )
        .expect("string write");
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn from_text(s: &str) -> Result<PointedTree> {
    let mut t = PointedTree::root_only();
    let mut ids: Vec<usize> = Vec::new();
    let mut marks: Vec<Option<bool>> = Vec::new();
    let mut pointed: Vec<Option<usize>> = vec![Some(0)];
    for (k, raw) in s.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        let [id, parent, len, pts, mark] = f[..] else {
            return Err(err(line, format!("expected 5 fields, found {}", f.len())));
        };
        let id: usize = id
            .parse()
            .map_err(|_| err(line, format!("bad id {id:?}")))?;
        if id != ids.len() {
            return Err(err(
                line,
                format!("vertex ids must be consecutive, expected {}", ids.len()),
            ));
        }
        let len: f64 = len
            .parse()
            .map_err(|_| err(line, format!("bad length {len:?}")))?;
        let v = if id == 0 {
            if parent != "-" || len != 0.0 {
                return Err(err(line, "the first line must be the root"));
            }
            0
        } else {
            let p: usize = parent
                .parse()
                .map_err(|_| err(line, format!("bad parent {parent:?}")))?;
            if p >= id {
                return Err(err(line, "parent must precede its child"));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(err(line, format!("edge length {len} must be positive")));
            }
            t.push_vertex(ids[p], len, t.height(ids[p]) + len)
        };
        ids.push(v);
        if pts != "-" {
            for i in pts.split(',') {
                let i: usize = i
                    .parse()
                    .map_err(|_| err(line, format!("bad pointed index {i:?}")))?;
                if i == 0 {
                    return Err(err(line, "index 0 is reserved for the root"));
                }
                if pointed.len() <= i {
                    pointed.resize(i + 1, None);
                }
                if pointed[i].replace(v).is_some() {
                    return Err(err(line, format!("pointed index {i} repeated")));
                }
            }
        }
        marks.push(match mark {
            "-" => None,
            "1" => Some(true),
            "0" => Some(false),
            m => return Err(err(line, format!("bad mark {m:?}"))),
        });
    }
    if ids.is_empty() {
        return Err(err(0, "empty tree"));
    }
    let last = s.lines().count();
    let pointed: Vec<usize> = pointed
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| err(last, format!("pointed index {i} missing"))))
        .collect::<Result<_>>()?;
    t.set_pointed(pointed)?;
    if marks.iter().all(Option::is_some) {
        let m: Vec<bool> = marks.into_iter().map(Option::unwrap).collect();
        t.set_marks(m).map_err(|e| err(last, e.to_string()))?;
    } else if marks.iter().any(Option::is_some) {
        return Err(err(last, "marks must be given for every vertex or none"));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::super::tests::fig123;
    use super::*;

    #[test]
    fn round_trip() {
        let t = fig123();
        let s = to_text(&t);
        assert_eq!(from_text(&s).unwrap(), t);
        let mut m = PointedTree::segment(1.5);
        let x = m.add_child(0, 0.25);
        m.set_marks(vec![true, true, false]).unwrap();
        m.push_pointed(x);
        let back = from_text(&to_text(&m)).unwrap();
        assert_eq!(to_text(&back), to_text(&m));
        assert_eq!(back.pointed().len(), 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "0 - 0 - -\n1 0 -1.0 1 -\n";
        assert!(matches!(from_text(bad), Err(Error::Parse { line: 2, .. })));
        let missing = "# header\n0 - 0 - -\n1 0 1.0 2 -\n";
        assert!(matches!(from_text(missing), Err(Error::Parse { .. })));
        assert!(matches!(
            from_text("0 - 0 -"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
