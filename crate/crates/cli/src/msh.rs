//! Gmsh MSH 2.2 ASCII reader: nodes and 4-node tetrahedra. Physical and
//! elementary tags are skipped, as are all other element types and
//! sections.

use std::collections::HashMap;

use hodgecurl_core::TetMesh;

use crate::error::ParseError;

const TET4: u32 = 4;

struct Lines<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    start: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0, line: 0, start: 0 }
    }

    /// Next non-blank line, trimmed.
    fn next(&mut self) -> Option<&'a str> {
        while self.pos < self.text.len() {
            let rest = &self.text[self.pos..];
            let len = rest.find('\n').map(|i| i + 1).unwrap_or(rest.len());
            self.start = self.pos;
            self.pos += len;
            self.line += 1;
            let l = rest[..len].trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line.max(1), byte: self.start, message: message.into() }
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.next() {
            Some(l) => Ok(l),
            None => {
                self.start = self.text.len();
                self.line += 1;
                Err(self.err(format!("unexpected end of file, expected {what}")))
            }
        }
    }

    fn number<T: std::str::FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T, ParseError> {
        let tok = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse().map_err(|_| self.err(format!("bad {what} {tok:?}")))
    }
}

pub fn parse(text: &str) -> Result<TetMesh, ParseError> {
    let mut lines = Lines::new(text);
    let mut format_seen = false;
    let mut nodes: Option<(Vec<[f64; 3]>, HashMap<u64, usize>)> = None;
    let mut raw_tets: Vec<(usize, [u64; 4])> = Vec::new();
    let mut elements_seen = false;

    while let Some(l) = lines.next() {
        match l {
            "$MeshFormat" => {
                let hdr = lines.expect("format header")?;
                let mut it = hdr.split_whitespace();
                let version: String = lines.number(it.next(), "version")?;
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {version}, expected 2.2")));
                }
                let file_type: u32 = lines.number(it.next(), "file type")?;
                if file_type != 0 {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                if lines.expect("$EndMeshFormat")? != "$EndMeshFormat" {
                    return Err(lines.err("expected $EndMeshFormat"));
                }
                format_seen = true;
            }
            "$Nodes" => {
                if nodes.is_some() {
                    return Err(lines.err("duplicate $Nodes section"));
                }
                let tok = lines.expect("node count")?;
                let n: usize = lines.number(Some(tok), "node count")?;
                let mut pts = Vec::with_capacity(n);
                let mut ids = HashMap::with_capacity(n);
                for _ in 0..n {
                    let row = lines.expect("node")?;
                    if row.starts_with('$') {
                        return Err(lines.err(format!("node section ended after {} of {n} nodes", pts.len())));
                    }
                    let mut it = row.split_whitespace();
                    let id: u64 = lines.number(it.next(), "node id")?;
                    let x: f64 = lines.number(it.next(), "x coordinate")?;
                    let y: f64 = lines.number(it.next(), "y coordinate")?;
                    let z: f64 = lines.number(it.next(), "z coordinate")?;
                    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                        return Err(lines.err("non-finite coordinate"));
                    }
                    if ids.insert(id, pts.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    pts.push([x, y, z]);
                }
                if lines.expect("$EndNodes")? != "$EndNodes" {
                    return Err(lines.err(format!("expected $EndNodes after {n} nodes")));
                }
                nodes = Some((pts, ids));
            }
            "$Elements" => {
                if elements_seen {
                    return Err(lines.err("duplicate $Elements section"));
                }
                elements_seen = true;
                let tok = lines.expect("element count")?;
                let n: usize = lines.number(Some(tok), "element count")?;
                for _ in 0..n {
                    let row = lines.expect("element")?;
                    if row.starts_with('$') {
                        return Err(lines.err("element section ended early"));
                    }
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    let _id: u64 = lines.number(toks.first().copied(), "element id")?;
                    let ty: u32 = lines.number(toks.get(1).copied(), "element type")?;
                    let ntags: usize = lines.number(toks.get(2).copied(), "tag count")?;
                    if ty != TET4 {
                        continue;
                    }
                    let first = 3 + ntags;
                    if toks.len() != first + 4 {
                        return Err(lines.err(format!("tetrahedron needs 4 nodes after {ntags} tags, line has {} fields", toks.len())));
                    }
                    let mut v = [0u64; 4];
                    for (k, slot) in v.iter_mut().enumerate() {
                        *slot = lines.number(Some(toks[first + k]), "node reference")?;
                    }
                    raw_tets.push((lines.line, v));
                }
                if lines.expect("$EndElements")? != "$EndElements" {
                    return Err(lines.err("expected $EndElements"));
                }
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                let end = format!("$End{}", &s[1..]);
                loop {
                    if lines.expect(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content {:?}", truncate(other)))),
        }
    }

    if !format_seen {
        return Err(ParseError { line: 1, byte: 0, message: "missing $MeshFormat section".into() });
    }
    let (pts, ids) = nodes.ok_or_else(|| ParseError { line: lines.line.max(1), byte: text.len(), message: "missing $Nodes section".into() })?;
    let mut tets = Vec::with_capacity(raw_tets.len());
    for (line, v) in raw_tets {
        let mut t = [0usize; 4];
        for k in 0..4 {
            t[k] = *ids.get(&v[k]).ok_or_else(|| ParseError {
                line,
                byte: line_start(text, line),
                message: format!("element references unknown node {}", v[k]),
            })?;
        }
        tets.push(t);
    }
    Ok(TetMesh { vertices: pts, tets })
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(40) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn line_start(text: &str, line: usize) -> usize {
    if line <= 1 {
        return 0;
    }
    text.match_indices('\n').nth(line - 2).map(|(i, _)| i + 1).unwrap_or(text.len())
}

/// MSH 2.2 ASCII text for a mesh; node ids are 1-based vertex indices.
pub fn write(mesh: &TetMesh) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    s.push_str(&format!("{}\n", mesh.vertices.len()));
    for (i, p) in mesh.vertices.iter().enumerate() {
        s.push_str(&format!("{} {:e} {:e} {:e}\n", i + 1, p[0], p[1], p[2]));
    }
    s.push_str(&format!("$EndNodes\n$Elements\n{}\n", mesh.tets.len()));
    for (i, t) in mesh.tets.iter().enumerate() {
        s.push_str(&format!("{} 4 2 0 1 {} {} {} {}\n", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1));
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n10 0 0 0\n20 1 0 0\n30 0 1 0\n40 0 0 1\n$EndNodes\n$Elements\n2\n1 15 2 0 1 10\n2 4 3 7 7 0 10 20 30 40\n$EndElements\n";

    #[test]
    fn reads_tags_and_skips_points() {
        let m = parse(TET).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.tets, vec![[0, 1, 2, 3]]);
    }

    #[test]
    fn round_trip() {
        let m = hodgecurl_core::meshgen::two_tets();
        let back = parse(&write(&m)).unwrap();
        assert_eq!(back.tets, m.tets);
        assert_eq!(back.vertices, m.vertices);
    }

    #[test]
    fn errors_carry_positions() {
        let bad = TET.replace("20 1 0 0", "20 1 zero 0");
        let e = parse(&bad).unwrap_err();
        assert_eq!(e.line, 7);
        assert_eq!(e.byte, bad.find("20 1 zero").unwrap());
        assert!(e.message.contains("y coordinate"));

        let e = parse(&TET.replace("10 20 30 40", "10 20 30 99")).unwrap_err();
        assert_eq!(e.line, 14);
        assert!(e.message.contains("unknown node 99"));

        let e = parse(&TET.replace("2.2 0 8", "4.1 0 8")).unwrap_err();
        assert_eq!(e.line, 2);

        let e = parse(&TET[..TET.find("$EndNodes").unwrap()]).unwrap_err();
        assert!(e.message.contains("end of file"));
        assert!(parse("").is_err());
    }
}
