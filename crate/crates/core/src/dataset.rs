//! Count data over `(z, x, y)` and its ingestion from CSV or JSON.
//!
//! CSV input has a `z,x,y,count` header. A column whose values are all
//! positive integers is read as 1-based levels; any other column is read as
//! labels, assigned to levels in order of first appearance. Two comment
//! directives refine this:
//!
//! ```text
//! #! dims Q=3 K=3 M=2
//! #! levels x: Arrest,Advise,Separate
//! ```
//!
//! A `levels` directive fixes the label order for that column, which makes
//! the result independent of row order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dims::Dims;
use crate::distribution::ObservedDistribution;
use crate::error::{Error, Result};

/// Optional level names per variable, index `level - 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Z,
    X,
    Y,
}

impl Variable {
    fn name(self) -> &'static str {
        match self {
            Variable::Z => "z",
            Variable::X => "x",
            Variable::Y => "y",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" => Some(Variable::Z),
            "x" => Some(Variable::X),
            "y" => Some(Variable::Y),
            _ => None,
        }
    }
}

impl Labels {
    pub fn get(&self, var: Variable) -> Option<&[String]> {
        match var {
            Variable::Z => self.z.as_deref(),
            Variable::X => self.x.as_deref(),
            Variable::Y => self.y.as_deref(),
        }
    }

    /// Exact label, then a unique case-insensitive label prefix, then a
    /// 1-based integer level within `dims`.
    pub fn resolve(&self, dims: &Dims, var: Variable, token: &str) -> Result<usize> {
        let token = token.trim();
        let bound = match var {
            Variable::Z => dims.q(),
            Variable::X => dims.k(),
            Variable::Y => dims.m(),
        };
        if let Some(names) = self.get(var) {
            if let Some(i) = names.iter().position(|n| n == token) {
                return Ok(i + 1);
            }
            let lower = token.to_lowercase();
            let hits: Vec<usize> = (0..names.len())
                .filter(|&i| !lower.is_empty() && names[i].to_lowercase().starts_with(&lower))
                .collect();
            if hits.len() == 1 {
                return Ok(hits[0] + 1);
            }
        }
        match token.parse::<usize>() {
            Ok(level) if (1..=bound).contains(&level) => Ok(level),
            _ => Err(Error::Parse(format!("unknown {} level {token:?}", var.name()))),
        }
    }

    fn slot(&mut self, var: Variable) -> &mut Option<Vec<String>> {
        match var {
            Variable::Z => &mut self.z,
            Variable::X => &mut self.x,
            Variable::Y => &mut self.y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    dims: Dims,
    /// Flat layout `(z - 1) * K * M + (x - 1) * M + (y - 1)`.
    counts: Vec<u64>,
    labels: Labels,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDims {
    #[serde(rename = "Q")]
    q: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDataset {
    dims: JsonDims,
    counts: Vec<[u64; 4]>,
    #[serde(default)]
    labels: Labels,
}

impl Dataset {
    /// Builds a dataset from a flat count vector in the canonical layout.
    pub fn new(dims: Dims, counts: Vec<u64>, labels: Labels) -> Result<Self> {
        let expected = dims.q() * dims.cells();
        if counts.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "count tensor has {} entries, expected Q*K*M={expected}",
                counts.len()
            )));
        }
        for (var, len) in [
            (Variable::Z, dims.q()),
            (Variable::X, dims.k()),
            (Variable::Y, dims.m()),
        ] {
            if let Some(names) = labels.get(var) {
                if names.len() != len {
                    return Err(Error::DimensionMismatch(format!(
                        "{} labels has {} entries, expected {len}",
                        var.name(),
                        names.len()
                    )));
                }
            }
        }
        let ds = Self { dims, counts, labels };
        if (1..=dims.q()).all(|z| ds.arm_size(z) == 0) {
            return Err(Error::InvalidDistribution("dataset has no observations".into()));
        }
        Ok(ds)
    }

    /// Builds a dataset from `[z, x, y, count]` quadruples with 1-based levels.
    /// Repeated cells are summed.
    pub fn from_quads(dims: Dims, quads: &[[u64; 4]], labels: Labels) -> Result<Self> {
        let mut counts = vec![0u64; dims.q() * dims.cells()];
        for &[z, x, y, c] in quads {
            let (z, x, y) = (z as usize, x as usize, y as usize);
            if z < 1 || z > dims.q() {
                return Err(Error::DimensionMismatch(format!(
                    "z={z} outside 1..={}",
                    dims.q()
                )));
            }
            let cell = dims.cell_flat(x, y)?;
            counts[(z - 1) * dims.cells() + cell] += c;
        }
        Self::new(dims, counts, labels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn count(&self, z: usize, x: usize, y: usize) -> u64 {
        let d = &self.dims;
        self.counts[(z - 1) * d.cells() + (x - 1) * d.m() + (y - 1)]
    }

    pub fn arm_counts(&self, z: usize) -> &[u64] {
        let c = self.dims.cells();
        &self.counts[(z - 1) * c..z * c]
    }

    pub fn arm_size(&self, z: usize) -> u64 {
        self.arm_counts(z).iter().sum()
    }

    pub fn arm_sizes(&self) -> Vec<u64> {
        (1..=self.dims.q()).map(|z| self.arm_size(z)).collect()
    }

    /// Resolves a level token for `var`: a label if labels exist and match,
    /// otherwise a 1-based integer level.
    pub fn resolve_level(&self, var: Variable, token: &str) -> Result<usize> {
        self.labels.resolve(&self.dims, var, token)
    }

    pub fn level_name(&self, var: Variable, level: usize) -> String {
        self.labels
            .get(var)
            .and_then(|names| names.get(level - 1).cloned())
            .unwrap_or_else(|| level.to_string())
    }

    /// Removes one instrument arm. The instrument is randomized, so the
    /// remaining arms still satisfy the IV assumptions.
    pub fn drop_arm(&self, z: usize) -> Result<Self> {
        let d = &self.dims;
        if z < 1 || z > d.q() {
            return Err(Error::DimensionMismatch(format!("cannot drop arm {z}")));
        }
        let dims = d.with_arms(d.q() - 1)?;
        let counts = (1..=d.q())
            .filter(|&a| a != z)
            .flat_map(|a| self.arm_counts(a).iter().copied())
            .collect();
        let mut labels = self.labels.clone();
        if let Some(names) = labels.z.as_mut() {
            names.remove(z - 1);
        }
        Self::new(dims, counts, labels)
    }

    /// Removes every observation that received treatment `x`, leaving `K - 1`
    /// treatment levels. Conditioning on the received treatment breaks the
    /// independence between instrument and potential outcomes, so the
    /// result is generally not a valid IV dataset.
    pub fn drop_treatment(&self, x: usize) -> Result<Self> {
        let d = &self.dims;
        if x < 1 || x > d.k() {
            return Err(Error::DimensionMismatch(format!("cannot drop treatment {x}")));
        }
        let dims = Dims::new(d.q(), d.k() - 1, d.m())?;
        let mut counts = Vec::with_capacity(dims.q() * dims.cells());
        for z in 1..=d.q() {
            for xi in (1..=d.k()).filter(|&xi| xi != x) {
                for y in 1..=d.m() {
                    counts.push(self.count(z, xi, y));
                }
            }
        }
        let mut labels = self.labels.clone();
        if let Some(names) = labels.x.as_mut() {
            names.remove(x - 1);
        }
        Self::new(dims, counts, labels)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: JsonDataset = serde_json::from_str(text)?;
        let dims = Dims::new(raw.dims.q, raw.dims.k, raw.dims.m)?;
        Self::from_quads(dims, &raw.counts, raw.labels)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let d = &self.dims;
        let mut counts = Vec::new();
        for z in 1..=d.q() {
            for x in 1..=d.k() {
                for y in 1..=d.m() {
                    counts.push([z as u64, x as u64, y as u64, self.count(z, x, y)]);
                }
            }
        }
        let raw = JsonDataset {
            dims: JsonDims {
                q: d.q(),
                k: d.k(),
                m: d.m(),
            },
            counts,
            labels: self.labels.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    /// CSV text with integer levels and `levels`/`dims` directives that
    /// reproduce this dataset exactly.
    pub fn to_csv_string(&self) -> String {
        let d = &self.dims;
        let mut out = format!("#! dims Q={} K={} M={}\n", d.q(), d.k(), d.m());
        out.push_str("z,x,y,count\n");
        for z in 1..=d.q() {
            for x in 1..=d.k() {
                for y in 1..=d.m() {
                    out.push_str(&format!("{z},{x},{y},{}\n", self.count(z, x, y)));
                }
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        parse_csv(text)
    }

    /// Reads `.json` files as JSON and anything else as CSV.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }
}

/// Empirical distribution `p̂_z = counts(z, ., .) / n_z` for every arm.
pub fn empirical_distributions(ds: &Dataset) -> Result<Vec<ObservedDistribution>> {
    let dims = ds.dims();
    (1..=dims.q())
        .map(|z| {
            let n = ds.arm_size(z);
            if n == 0 {
                return Err(Error::ZeroArm { arm: z });
            }
            let probs = ds.arm_counts(z).iter().map(|&c| c as f64 / n as f64).collect();
            ObservedDistribution::new(&dims, z, probs, n)
        })
        .collect()
}

#[derive(Default)]
struct Directives {
    dims: Option<(usize, usize, usize)>,
    levels: BTreeMap<&'static str, Vec<String>>,
}

fn parse_directive(line: &str, dirs: &mut Directives) -> Result<()> {
    let body = line.trim_start_matches("#!").trim();
    if let Some(rest) = body.strip_prefix("dims") {
        let mut q = None;
        let mut k = None;
        let mut m = None;
        for part in rest.split_whitespace() {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad dims directive: {line}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad dims value in: {line}")))?;
            match key.to_ascii_uppercase().as_str() {
                "Q" => q = Some(value),
                "K" => k = Some(value),
                "M" => m = Some(value),
                _ => return Err(Error::Parse(format!("unknown dims key {key:?}"))),
            }
        }
        match (q, k, m) {
            (Some(q), Some(k), Some(m)) => dirs.dims = Some((q, k, m)),
            _ => return Err(Error::Parse(format!("dims directive needs Q, K and M: {line}"))),
        }
    } else if let Some(rest) = body.strip_prefix("levels") {
        let (var, names) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad levels directive: {line}")))?;
        let var = Variable::parse(var).ok_or_else(|| Error::Parse(format!("unknown variable in: {line}")))?;
        let names: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(Error::Parse(format!("empty level name in: {line}")));
        }
        dirs.levels.insert(var.name(), names);
    } else {
        return Err(Error::Parse(format!("unknown directive: {line}")));
    }
    Ok(())
}

fn parse_csv(text: &str) -> Result<Dataset> {
    let mut dirs = Directives::default();
    for line in text.lines() {
        if line.trim_start().starts_with("#!") {
            parse_directive(line.trim_start(), &mut dirs)?;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if headers != ["z", "x", "y", "count"] {
        return Err(Error::Parse(format!(
            "expected header z,x,y,count, found {}",
            headers.join(",")
        )));
    }

    let mut rows: Vec<([String; 3], u64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Parse(format!("row {}: expected 4 fields", i + 1)));
        }
        let count: u64 = record[3]
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad count {:?}", i + 1, &record[3])))?;
        rows.push(([record[0].into(), record[1].into(), record[2].into()], count));
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }

    let mut labels = Labels::default();
    let mut levels: Vec<[usize; 3]> = vec![[0; 3]; rows.len()];
    let mut max_level = [0usize; 3];
    for (col, var) in [Variable::Z, Variable::X, Variable::Y].into_iter().enumerate() {
        let declared = dirs.levels.get(var.name()).cloned();
        let all_integer = rows
            .iter()
            .all(|(v, _)| v[col].parse::<usize>().is_ok_and(|l| l >= 1));
        if declared.is_none() && all_integer {
            for (i, (v, _)) in rows.iter().enumerate() {
                let l: usize = v[col].parse().expect("checked above");
                levels[i][col] = l;
                max_level[col] = max_level[col].max(l);
            }
            continue;
        }
        let mut names = declared.clone().unwrap_or_default();
        for (i, (v, _)) in rows.iter().enumerate() {
            let pos = match names.iter().position(|n| n == &v[col]) {
                Some(p) => p,
                None if declared.is_some() => {
                    return Err(Error::Parse(format!(
                        "{} value {:?} is not among the declared levels",
                        var.name(),
                        v[col]
                    )))
                }
                None => {
                    names.push(v[col].clone());
                    names.len() - 1
                }
            };
            levels[i][col] = pos + 1;
        }
        max_level[col] = names.len();
        *labels.slot(var) = Some(names);
    }

    let dims = match dirs.dims {
        Some((q, k, m)) => {
            let d = Dims::new(q, k, m)?;
            for (col, bound) in [d.q(), d.k(), d.m()].into_iter().enumerate() {
                if max_level[col] > bound {
                    return Err(Error::DimensionMismatch(format!(
                        "level {} in column {} exceeds declared dims {d}",
                        max_level[col],
                        ["z", "x", "y"][col]
                    )));
                }
            }
            for (var, len) in [(Variable::Z, d.q()), (Variable::X, d.k()), (Variable::Y, d.m())] {
                if let Some(names) = labels.get(var) {
                    if names.len() != len {
                        return Err(Error::DimensionMismatch(format!(
                            "{} has {} labels but dims declare {len}",
                            var.name(),
                            names.len()
                        )));
                    }
                }
            }
            d
        }
        None => Dims::new(max_level[0], max_level[1], max_level[2])?,
    };

    let quads: Vec<[u64; 4]> = rows
        .iter()
        .zip(&levels)
        .map(|((_, c), l)| [l[0] as u64, l[1] as u64, l[2] as u64, *c])
        .collect();
    Dataset::from_quads(dims, &quads, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINNEAPOLIS: &str = "\
#! levels z: Arrest,Advise,Separate
#! levels x: Arrest,Advise,Separate
z,x,y,count
Arrest,Arrest,1,81
Arrest,Arrest,2,10
Arrest,Advise,1,0
Arrest,Advise,2,0
Arrest,Separate,1,1
Arrest,Separate,2,0
";

    #[test]
    fn arrest_arm_of_minneapolis() {
        let ds = Dataset::from_csv_str(MINNEAPOLIS).unwrap();
        let dims = ds.dims();
        assert_eq!((dims.q(), dims.k(), dims.m()), (3, 3, 2));
        // Only the Arrest arm is present; the other two arms are empty.
        assert!(matches!(
            empirical_distributions(&ds),
            Err(Error::ZeroArm { arm: 2 })
        ));
        let arm = ds.drop_arm(3).unwrap().drop_arm(2).unwrap();
        let p = empirical_distributions(&arm).unwrap();
        assert_eq!(p[0].n(), 92);
        let d = arm.dims();
        assert_eq!(p[0].prob(&d, 1, 1), 81.0 / 92.0);
        assert_eq!(p[0].prob(&d, 1, 2), 10.0 / 92.0);
        assert_eq!(p[0].prob(&d, 3, 1), 1.0 / 92.0);
        assert_eq!(p[0].prob(&d, 2, 1), 0.0);
    }

    #[test]
    fn point_mass_counts() {
        let dims = Dims::new(1, 2, 2).unwrap();
        let ds = Dataset::from_quads(dims, &[[1, 1, 1, 5]], Labels::default()).unwrap();
        let p = empirical_distributions(&ds).unwrap();
        assert_eq!(p[0].probs(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p[0].n(), 5);
    }

    #[test]
    fn uniform_counts() {
        let dims = Dims::new(1, 3, 2).unwrap();
        let ds = Dataset::new(dims, vec![1; 6], Labels::default()).unwrap();
        let p = empirical_distributions(&ds).unwrap();
        assert!(p[0].probs().iter().all(|&v| v == 1.0 / 6.0));
    }

    #[test]
    fn shape_errors() {
        let dims = Dims::new(2, 2, 2).unwrap();
        assert!(matches!(
            Dataset::new(dims, vec![1; 7], Labels::default()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(Dataset::new(dims, vec![0; 8], Labels::default()).is_err());
        assert!(Dataset::from_quads(dims, &[[3, 1, 1, 1]], Labels::default()).is_err());
    }

    #[test]
    fn integer_csv_with_comments_and_dims() {
        let text = "# a comment\n#! dims Q=2 K=2 M=3\nz,x,y,count\n1,1,1,4\n2,2,3,6\n1,1,1,1\n";
        let ds = Dataset::from_csv_str(text).unwrap();
        assert_eq!(ds.dims(), Dims::new(2, 2, 3).unwrap());
        assert_eq!(ds.count(1, 1, 1), 5);
        assert_eq!(ds.arm_sizes(), vec![5, 6]);
    }

    #[test]
    fn labels_by_first_appearance() {
        let text = "z,x,y,count\nb,u,1,1\na,v,2,1\nb,v,1,2\n";
        let ds = Dataset::from_csv_str(text).unwrap();
        assert_eq!(ds.labels().z.as_deref().unwrap(), ["b", "a"]);
        assert_eq!(ds.resolve_level(Variable::X, "v").unwrap(), 2);
        assert_eq!(ds.resolve_level(Variable::Y, "2").unwrap(), 2);
        assert!(ds.resolve_level(Variable::X, "w").is_err());
    }

    #[test]
    fn undeclared_label_is_rejected() {
        let text = "#! levels x: a,b\nz,x,y,count\n1,c,1,1\n";
        assert!(Dataset::from_csv_str(text).is_err());
    }

    #[test]
    fn bad_header() {
        assert!(Dataset::from_csv_str("a,b,c,d\n1,1,1,1\n").is_err());
    }

    #[test]
    fn json_roundtrip() {
        let ds = Dataset::from_csv_str(MINNEAPOLIS).unwrap();
        let back = Dataset::from_json_str(&ds.to_json_string().unwrap()).unwrap();
        assert_eq!(ds, back);
        let csv_back = Dataset::from_csv_str(&ds.to_csv_string()).unwrap();
        assert_eq!(csv_back.dims(), ds.dims());
        assert_eq!(csv_back.arm_sizes(), ds.arm_sizes());
    }

    #[test]
    fn surgery() {
        let dims = Dims::new(2, 3, 2).unwrap();
        let counts: Vec<u64> = (1..=12).collect();
        let ds = Dataset::new(dims, counts, Labels::default()).unwrap();
        let nx = ds.drop_treatment(2).unwrap();
        assert_eq!(nx.dims(), Dims::new(2, 2, 2).unwrap());
        assert_eq!(nx.arm_counts(1), &[1, 2, 5, 6]);
        let nz = ds.drop_arm(1).unwrap();
        assert_eq!(nz.arm_counts(1), &[7, 8, 9, 10, 11, 12]);
    }
}
