//! Deterministic JSON output: sorted keys, floats in `{:.16e}` form
//! (17 significant digits), small matrices inline and large ones as norms
//! plus an optional binary sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use faer::{Mat, MatRef};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SCHEMA: &str = "hodgecurl-report/1";

/// Matrices with at most this many entries are written inline.
pub const INLINE_LIMIT: usize = 64;

/// Finite floats become numbers; NaN and infinities become `null`.
pub fn num(x: f64) -> Value {
    Value::from(x)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

/// Matrices too large to inline, collected for the sidecar directory.
#[derive(Default)]
pub struct Sidecars {
    enabled: bool,
    pending: Vec<(String, Mat<f64>)>,
}

impl Sidecars {
    /// Large matrices are only summarized unless `enabled`.
    pub fn new(enabled: bool) -> Self {
        Self { enabled, pending: Vec::new() }
    }

    /// Inline `{rows, cols, data}` for small matrices, otherwise
    /// `{rows, cols, frobenius, max_abs}`; with sidecars enabled the matrix
    /// is also queued under `name` and the file is named in `sidecar`.
    pub fn matrix(&mut self, name: &str, m: MatRef<'_, f64>) -> Value {
        let (r, c) = (m.nrows(), m.ncols());
        if r * c <= INLINE_LIMIT {
            let data: Vec<Value> = (0..r).map(|i| Value::Array((0..c).map(|j| num(m[(i, j)])).collect())).collect();
            return json!({ "rows": r, "cols": c, "data": data });
        }
        let mut fro = 0.0f64;
        let mut mx = 0.0f64;
        for j in 0..c {
            for i in 0..r {
                fro += m[(i, j)] * m[(i, j)];
                mx = mx.max(m[(i, j)].abs());
            }
        }
        let mut v = json!({ "rows": r, "cols": c, "frobenius": num(fro.sqrt()), "max_abs": num(mx) });
        if self.enabled {
            let file = format!("{name}.bin");
            self.pending.push((file.clone(), m.to_owned()));
            v["sidecar"] = json!(file);
        }
        v
    }

    /// Writes queued matrices as `u64 rows, u64 cols` followed by row-major
    /// `f64`, all little-endian.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let out_err = |path: &Path, source| CliError::Output { path: path.to_path_buf(), source };
        std::fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        let mut written = Vec::new();
        for (name, m) in &self.pending {
            let path = dir.join(name);
            let mut buf = Vec::with_capacity(16 + 8 * m.nrows() * m.ncols());
            buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
            buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    buf.extend_from_slice(&m[(i, j)].to_le_bytes());
                }
            }
            std::fs::write(&path, buf).map_err(|e| out_err(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Reads a sidecar file back.
pub fn read_sidecar(bytes: &[u8]) -> Option<Mat<f64>> {
    let word = |k: usize| -> Option<[u8; 8]> { bytes.get(8 * k..8 * k + 8)?.try_into().ok() };
    let r = u64::from_le_bytes(word(0)?) as usize;
    let c = u64::from_le_bytes(word(1)?) as usize;
    if bytes.len() != 16 + 8 * r * c {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| f64::from_le_bytes(word(2 + i * c + j).unwrap())))
}

struct FixedFloats<'a> {
    inner: PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
            self.inner.$name(w)
        })*
    };
}

impl Formatter for FixedFloats<'_> {
    delegate!(end_array, end_object, end_array_value, end_object_value, begin_array, begin_object, begin_object_value);

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

/// Pretty-printed JSON with a trailing newline. Object keys come out
/// sorted because `serde_json::Map` is ordered.
pub fn to_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let fmt = FixedFloats { inner: PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    serde::Serialize::serialize(v, &mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits_and_keys_sort() {
        let v = json!({ "b": 0.1, "a": [1.0, -2.5e-300], "c": 3 });
        let s = to_string(&v);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("\"c\": 3"));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn large_matrices_go_to_sidecars() {
        let mut off = Sidecars::default();
        let big = Mat::from_fn(5, 13, |i, j| i as f64 - 0.5 * j as f64);
        assert!(off.matrix("big", big.as_ref()).get("sidecar").is_none());
        assert!(off.is_empty());
        let mut sc = Sidecars::new(true);
        let small = Mat::from_fn(8, 8, |i, j| (i * 8 + j) as f64);
        let v = sc.matrix("small", small.as_ref());
        assert_eq!(v["data"][7][7].as_f64(), Some(63.0));
        assert!(sc.is_empty());
        let v = sc.matrix("big", big.as_ref());
        assert_eq!(v["sidecar"], "big.bin");
        assert_eq!(v["max_abs"].as_f64(), Some(6.0));
        let dir = std::env::temp_dir().join(format!("hodgecurl-sidecar-{}", std::process::id()));
        let files = sc.write_all(&dir).unwrap();
        let back = read_sidecar(&std::fs::read(&files[0]).unwrap()).unwrap();
        assert_eq!(back, big);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
