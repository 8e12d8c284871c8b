//! Field files, flat `key = value` reports, atomic writes and contour export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

pub const FIELD_FORMAT_VERSION: u32 = 1;
pub const FIELD_COLUMNS: [&str; 9] = ["ell", "lam", "x", "y", "psi", "vx", "vy", "rho", "mach"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("header key `{0}` is missing")]
    MissingKey(String),
}

/// Shortest decimal form with 17 significant digits; parsing it back gives
/// the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` next to `path` and renames it into place, so `path` is
/// never left partially written.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let fs_err = |source| IoError::Fs {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(fs_err)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(fs_err)
}

/// Ordered flat `key = value` document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt_f64(value))
    }

    pub fn int(&mut self, key: &str, value: usize) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.text(key, joined.join(","))
    }

    pub fn extend(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, v) in &other.entries {
            self.entries.push((format!("{prefix}{k}"), v.clone()));
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut r = Report::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| IoError::Parse {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            r.text(k, v);
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Samples on the `(n_ell + 1) x (n_lam + 1)` node grid, `lam` varying
/// fastest, with a `# key = value` header.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: Vec<(String, String)>,
    pub rows: Vec<[f64; 9]>,
}

impl FieldFile {
    pub fn header_value(&self, key: &str) -> Result<&str, IoError> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| IoError::MissingKey(key.into()))
    }

    pub fn header_usize(&self, key: &str) -> Result<usize, IoError> {
        let v = self.header_value(key)?;
        v.parse().map_err(|_| IoError::Parse {
            line: 0,
            message: format!("header `{key}` = `{v}` is not an integer"),
        })
    }

    pub fn header_f64(&self, key: &str) -> Result<f64, IoError> {
        let v = self.header_value(key)?;
        v.parse().map_err(|_| IoError::Parse {
            line: 0,
            message: format!("header `{key}` = `{v}` is not a number"),
        })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = FIELD_COLUMNS.iter().position(|n| *n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 9 * 25);
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# columns = {}", FIELD_COLUMNS.join(" "));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut header = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| IoError::Parse { line: i + 1, message };
            if let Some(h) = line.strip_prefix('#') {
                let (k, v) = h
                    .split_once(" = ")
                    .ok_or_else(|| err("header lines read `# key = value`".into()))?;
                let k = k.trim();
                if k != "columns" {
                    header.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut row = [0.0; 9];
            let mut n = 0;
            for tok in line.split_whitespace() {
                if n == 9 {
                    return Err(err("more than 9 columns".into()));
                }
                row[n] = tok.parse().map_err(|_| err(format!("`{tok}` is not a number")))?;
                n += 1;
            }
            if n != 9 {
                return Err(err(format!("expected 9 columns, found {n}")));
            }
            rows.push(row);
        }
        let f = FieldFile { header, rows };
        let version = f.header_usize("format_version")?;
        if version != FIELD_FORMAT_VERSION as usize {
            return Err(IoError::Parse {
                line: 0,
                message: format!("unsupported format_version {version}"),
            });
        }
        let want = (f.header_usize("n_ell")? + 1) * (f.header_usize("n_lam")? + 1);
        if f.rows.len() != want {
            return Err(IoError::Parse {
                line: 0,
                message: format!("{} rows for a grid of {want} nodes", f.rows.len()),
            });
        }
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Fs {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Polylines of `value = level` on a structured grid of `ni x nj` nodes
/// (index `i * nj + j`) by marching squares; saddles are resolved with the
/// cell average.
pub fn contour_polylines(
    points: &[[f64; 2]],
    values: &[f64],
    ni: usize,
    nj: usize,
    level: f64,
) -> Vec<Vec<[f64; 2]>> {
    let idx = |i: usize, j: usize| i * nj + j;
    // edge ids: horizontal (i, j)-(i, j+1) and vertical (i, j)-(i+1, j)
    let h_edge = |i: usize, j: usize| 2 * idx(i, j);
    let v_edge = |i: usize, j: usize| 2 * idx(i, j) + 1;
    let above = |k: usize| values[k] > level;
    let crossing = |a: usize, b: usize| {
        let (fa, fb) = (values[a] - level, values[b] - level);
        let t = fa / (fa - fb);
        [
            points[a][0] + t * (points[b][0] - points[a][0]),
            points[a][1] + t * (points[b][1] - points[a][1]),
        ]
    };
    let mut where_at: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..ni.saturating_sub(1) {
        for j in 0..nj.saturating_sub(1) {
            let c = [idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)];
            // edges in cyclic order: bottom (c0-c1), right (c1-c2), top (c3-c2), left (c0-c3)
            let edges = [
                (h_edge(i, j), c[0], c[1]),
                (v_edge(i, j + 1), c[1], c[2]),
                (h_edge(i + 1, j), c[3], c[2]),
                (v_edge(i, j), c[0], c[3]),
            ];
            let cut: Vec<usize> = (0..4).filter(|e| above(edges[*e].1) != above(edges[*e].2)).collect();
            for &e in &cut {
                let (id, a, b) = edges[e];
                where_at.entry(id).or_insert_with(|| crossing(a, b));
            }
            match cut.len() {
                2 => segments.push((edges[cut[0]].0, edges[cut[1]].0)),
                4 => {
                    let mean = c.iter().map(|k| values[*k]).sum::<f64>() / 4.0;
                    let e = |n: usize| edges[n].0;
                    if (mean > level) == above(c[0]) {
                        segments.push((e(0), e(1)));
                        segments.push((e(2), e(3)));
                    } else {
                        segments.push((e(0), e(3)));
                        segments.push((e(1), e(2)));
                    }
                }
                _ => {}
            }
        }
    }
    // chain segments sharing edge crossings
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(s);
        adj.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_node: usize, first: usize, used: &mut Vec<bool>| {
        let mut path = vec![start_node];
        let mut seg = first;
        let mut node = start_node;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            node = if a == node { b } else { a };
            path.push(node);
            match adj[&node].iter().find(|s| !used[**s]) {
                Some(s) => seg = *s,
                None => break,
            }
        }
        path
    };
    // open chains first (endpoints with one segment), then closed loops
    let mut starts: Vec<usize> = adj.iter().filter(|(_, s)| s.len() == 1).map(|(n, _)| *n).collect();
    starts.sort_unstable();
    for n in starts {
        let s = adj[&n][0];
        if !used[s] {
            lines.push(walk(n, s, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(segments[s].0, s, &mut used));
        }
    }
    lines
        .into_iter()
        .map(|p| p.into_iter().map(|e| where_at[&e]).collect())
        .collect()
}

/// CSV `level,line,x,y` of contour polylines of the `psi` column.
pub fn contours_csv(field: &FieldFile, levels: &[f64]) -> Result<String, IoError> {
    let ni = field.header_usize("n_ell")? + 1;
    let nj = field.header_usize("n_lam")? + 1;
    let points: Vec<[f64; 2]> = field.rows.iter().map(|r| [r[2], r[3]]).collect();
    let psi = field.column("psi").expect("psi column exists");
    let mut out = String::from("level,line,x,y\n");
    for &level in levels {
        for (n, line) in contour_polylines(&points, &psi, ni, nj, level).iter().enumerate() {
            for p in line {
                let _ = writeln!(out, "{},{},{},{}", fmt_f64(level), n, fmt_f64(p[0]), fmt_f64(p[1]));
            }
        }
    }
    Ok(out)
}

/// `count` levels evenly spaced strictly inside the range of `values`.
pub fn interior_levels(values: &[f64], count: usize) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    (1..=count).map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_field(ni: usize, nj: usize, f: impl Fn(f64, f64) -> f64) -> FieldFile {
        let mut rows = Vec::new();
        for i in 0..ni {
            for j in 0..nj {
                let (x, y) = (i as f64, j as f64 / (nj - 1) as f64);
                rows.push([x, y, x, y, f(x, y), 0.0, 0.0, 1.0, 0.0]);
            }
        }
        FieldFile {
            header: vec![
                ("format_version".into(), "1".into()),
                ("n_ell".into(), (ni - 1).to_string()),
                ("n_lam".into(), (nj - 1).to_string()),
            ],
            rows,
        }
    }

    #[test]
    fn field_roundtrip_and_errors() {
        let f = grid_field(4, 3, |x, y| (x * 0.1).exp() * y.sin() / 3.0);
        let back = FieldFile::parse(&f.render()).unwrap();
        assert_eq!(back, f);
        let short: String = f.render().lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(FieldFile::parse(&short).is_err());
        assert!(FieldFile::parse("# format_version = 1\n1 2 3\n").is_err());
    }

    proptest! {
        #[test]
        fn formatted_numbers_roundtrip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = fmt_f64(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn report_order_and_parse() {
        let mut r = Report::new();
        r.text("b", "x").num("a", 0.1).int("n", 3).flag("ok", true).list("l", &[1.0, 2.0]);
        let text = r.render();
        assert!(text.starts_with("b = x\na = 1.0000000000000001e-1\n"));
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert_eq!(r.get_f64("a"), Some(0.1));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/report.txt");
        write_atomic(&p, b"one\n").unwrap();
        write_atomic(&p, b"two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        let leftovers = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
        // a directory in the way fails without touching anything else
        let blocked = dir.path().join("blocked");
        std::fs::create_dir_all(blocked.join("x")).unwrap();
        assert!(write_atomic(&blocked, b"z").is_err());
    }

    #[test]
    fn linear_field_contours_are_straight() {
        let f = grid_field(6, 5, |x, _| x);
        let ni = 6;
        let pts: Vec<[f64; 2]> = f.rows.iter().map(|r| [r[2], r[3]]).collect();
        let vals = f.column("psi").unwrap();
        let lines = contour_polylines(&pts, &vals, ni, 5, 2.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        assert!(lines[0].iter().all(|p| (p[0] - 2.5).abs() < 1e-15));
        let csv = contours_csv(&f, &interior_levels(&vals, 3)).unwrap();
        assert!(csv.starts_with("level,line,x,y\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * 5);
    }

    #[test]
    fn closed_contour_is_one_loop() {
        let f = grid_field(9, 9, |x, y| (x - 4.0).powi(2) + (8.0 * y - 4.0).powi(2));
        let pts: Vec<[f64; 2]> = f.rows.iter().map(|r| [r[2], r[3]]).collect();
        let vals = f.column("psi").unwrap();
        let lines = contour_polylines(&pts, &vals, 9, 9, 5.0);
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.first(), l.last());
    }
}
