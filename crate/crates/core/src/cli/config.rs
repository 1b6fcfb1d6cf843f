//! INI-style run configuration: `[section]` headers, `key = value` lines,
//! `#` or `;` comments. Matrices are written row by row, rows separated by
//! `;` and entries by `,` or whitespace.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::potential::{parse_potential, quadratic_potential, Potential};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub section: String,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "[{}]", self.section)?;
        if let Some(key) = &self.key {
            write!(f, " {key}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq)]
struct Section {
    line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

/// Raw sections with line numbers kept for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    sections: BTreeMap<String, Section>,
}

fn err(
    line: Option<usize>,
    section: &str,
    key: Option<&str>,
    message: impl Into<String>,
) -> ConfigError {
    ConfigError {
        line,
        section: section.to_string(),
        key: key.map(str::to_string),
        message: message.into(),
    }
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(Some(line_no), rest, None, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if ini.sections.contains_key(&name) {
                    return Err(err(Some(line_no), &name, None, "duplicate section"));
                }
                ini.sections.insert(
                    name.clone(),
                    Section {
                        line: line_no,
                        entries: BTreeMap::new(),
                    },
                );
                current = Some(name);
                continue;
            }
            let Some(section) = current.as_ref() else {
                return Err(err(Some(line_no), "", None, "key outside of any section"));
            };
            let (key, value) = line.split_once('=').ok_or_else(|| {
                err(
                    Some(line_no),
                    section,
                    None,
                    format!("expected `key = value`, found `{line}`"),
                )
            })?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(err(Some(line_no), section, None, "empty key"));
            }
            let entries = &mut ini
                .sections
                .get_mut(section)
                .expect("current section exists")
                .entries;
            if entries.contains_key(&key) {
                return Err(err(Some(line_no), section, Some(&key), "duplicate key"));
            }
            entries.insert(key, (value.trim().to_string(), line_no));
        }
        Ok(ini)
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn section(&self, name: &str) -> Result<&Section, ConfigError> {
        self.sections
            .get(name)
            .ok_or_else(|| err(None, name, None, "missing section"))
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.sections
            .get(section)?
            .entries
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| {
                err(
                    Some(line),
                    section,
                    Some(key),
                    format!("cannot parse `{v}`: {e}"),
                )
            }),
        }
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let line = self.section(section)?.line;
        self.get(section, key)?
            .ok_or_else(|| err(Some(line), section, Some(key), "missing key"))
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|e| {
                    err(
                        Some(line),
                        section,
                        Some(key),
                        format!("cannot parse `{s}`: {e}"),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn matrix(&self, section: &str, key: &str) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(';')
            .map(|row| {
                row.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|e| {
                            err(
                                Some(line),
                                section,
                                Some(key),
                                format!("cannot parse `{s}`: {e}"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .filter(|r| !matches!(r, Ok(row) if row.is_empty()))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.raw(section, key)
            .map(|(_, l)| l)
            .or_else(|| self.sections.get(section).map(|s| s.line))
    }

    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        err(self.line_of(section, key), section, Some(key), message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub p: usize,
    pub half_widths: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Quadratic { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    Expression { text: String, nonnegative: bool },
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub h: f64,
    pub h0: f64,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub gap_tol: Option<f64>,
    pub basis: Option<usize>,
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub lambdas: Vec<f64>,
    pub radii: Vec<f64>,
    pub widths: Option<Vec<f64>>,
    pub probes: usize,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Analytic,
    Richardson,
    ExactLaplacian,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("grid", &["n", "p", "half_widths", "points"]),
    (
        "potential",
        &["kind", "a", "b", "expression", "nonnegative"],
    ),
    (
        "solver",
        &[
            "h", "h0", "k", "tol", "max_iter", "seed", "basis", "shift", "gap_tol",
        ],
    ),
    ("analytic", &["e_max", "count"]),
    ("probe", &["lambdas", "radii", "widths", "probes", "scales"]),
    ("converge", &["sizes", "reference"]),
    ("output", &["format", "path"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    ini: Ini,
    pub solver: SolverConfig,
    pub format: OutputFormat,
    pub path: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::parse(text)?;
        for (name, section) in &ini.sections {
            let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| s == name) else {
                return Err(err(Some(section.line), name, None, "unknown section"));
            };
            for (key, (_, line)) in &section.entries {
                if !keys.contains(&key.as_str()) {
                    return Err(err(
                        Some(*line),
                        name,
                        Some(key),
                        format!("unknown key (expected one of: {})", keys.join(", ")),
                    ));
                }
            }
        }
        let solver = SolverConfig {
            h: ini.get("solver", "h")?.unwrap_or(0.1),
            h0: ini
                .get("solver", "h0")?
                .unwrap_or(crate::discretization::DEFAULT_H0),
            k: ini.get("solver", "k")?.unwrap_or(5),
            tol: ini.get("solver", "tol")?.unwrap_or(1e-8),
            max_iter: ini.get("solver", "max_iter")?.unwrap_or(100_000),
            seed: ini.get("solver", "seed")?.unwrap_or(0),
            gap_tol: ini.get("solver", "gap_tol")?,
            basis: ini.get("solver", "basis")?,
            shift: ini.get("solver", "shift")?,
        };
        if !(solver.h0 > 0.0) {
            return Err(ini.fail("solver", "h0", "h0 must be positive"));
        }
        if !(solver.h > 0.0 && solver.h <= solver.h0) {
            return Err(ini.fail(
                "solver",
                "h",
                format!("h = {} is outside (0, {}]", solver.h, solver.h0),
            ));
        }
        if !(solver.tol > 0.0) {
            return Err(ini.fail("solver", "tol", "tolerance must be positive"));
        }
        if matches!(solver.gap_tol, Some(g) if !(g > 0.0)) {
            return Err(ini.fail("solver", "gap_tol", "gap tolerance must be positive"));
        }
        let format = ini.get("output", "format")?.unwrap_or(OutputFormat::Csv);
        let path = ini.get::<String>("output", "path")?;
        Ok(Self {
            ini,
            solver,
            format,
            path,
        })
    }

    pub fn grid(&self) -> Result<GridConfig, ConfigError> {
        let ini = &self.ini;
        ini.section("grid")?;
        let n: usize = ini.require("grid", "n")?;
        let p: usize = ini.get("grid", "p")?.unwrap_or(0);
        let dims = n + p;
        let widen = |v: Vec<f64>| if v.len() == 1 { vec![v[0]; dims] } else { v };
        let half_widths = widen(
            ini.list("grid", "half_widths")?
                .ok_or_else(|| ini.fail("grid", "half_widths", "missing key"))?,
        );
        let points: Vec<usize> = ini
            .list("grid", "points")?
            .ok_or_else(|| ini.fail("grid", "points", "missing key"))?;
        let points = if points.len() == 1 {
            vec![points[0]; dims]
        } else {
            points
        };
        if half_widths.len() != dims {
            return Err(ini.fail(
                "grid",
                "half_widths",
                format!("expected 1 or {dims} values, got {}", half_widths.len()),
            ));
        }
        if points.len() != dims {
            return Err(ini.fail(
                "grid",
                "points",
                format!("expected 1 or {dims} values, got {}", points.len()),
            ));
        }
        Ok(GridConfig {
            n,
            p,
            half_widths,
            points,
        })
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec, ConfigError> {
        let ini = &self.ini;
        ini.section("potential")?;
        let kind: String = ini.require("potential", "kind")?;
        match kind.to_ascii_lowercase().as_str() {
            "quadratic" => {
                let a = ini
                    .matrix("potential", "a")?
                    .ok_or_else(|| ini.fail("potential", "a", "missing key"))?;
                let b = ini.matrix("potential", "b")?.unwrap_or_default();
                Ok(PotentialSpec::Quadratic { a, b })
            }
            "expression" => {
                let text = ini.require("potential", "expression")?;
                let nonnegative = ini.get("potential", "nonnegative")?.unwrap_or(false);
                Ok(PotentialSpec::Expression { text, nonnegative })
            }
            "zero" => Ok(PotentialSpec::Zero),
            other => Err(ini.fail(
                "potential",
                "kind",
                format!("unknown kind `{other}` (quadratic, expression, zero)"),
            )),
        }
    }

    /// The potential, checked against the grid dimensions.
    pub fn potential(&self, grid: &GridConfig) -> Result<Potential, ConfigError> {
        let ini = &self.ini;
        match self.potential_spec()? {
            PotentialSpec::Quadratic { a, b } => {
                if a.len() != grid.n || b.len() != grid.p {
                    return Err(ini.fail(
                        "potential",
                        "a",
                        format!(
                            "matrices are {}×· and {}×·, grid has n = {}, p = {}",
                            a.len(),
                            b.len(),
                            grid.n,
                            grid.p
                        ),
                    ));
                }
                quadratic_potential(&a, &b).map_err(|e| ini.fail("potential", "a", e.to_string()))
            }
            PotentialSpec::Expression { text, nonnegative } => {
                parse_potential(&text, grid.n, grid.p)
                    .map(|e| Potential::expression(e, nonnegative))
                    .map_err(|e| ini.fail("potential", "expression", e.to_string()))
            }
            PotentialSpec::Zero => Ok(Potential::zero(grid.n, grid.p)),
        }
    }

    /// `Some(count)` or `Some(e_max)`; count defaults to `solver.k`.
    pub fn analytic_cutoff(&self) -> Result<crate::analytic::Cutoff, ConfigError> {
        use crate::analytic::Cutoff;
        let e_max: Option<f64> = self.ini.get("analytic", "e_max")?;
        let count: Option<usize> = self.ini.get("analytic", "count")?;
        match (e_max, count) {
            (Some(_), Some(_)) => {
                Err(self
                    .ini
                    .fail("analytic", "count", "give either e_max or count, not both"))
            }
            (Some(e), None) => Ok(Cutoff::MaxEnergy(e)),
            (None, Some(c)) => Ok(Cutoff::Count(c)),
            (None, None) => Ok(Cutoff::Count(self.solver.k)),
        }
    }

    pub fn probe(&self) -> Result<ProbeConfig, ConfigError> {
        let ini = &self.ini;
        ini.section("probe")?;
        let lambdas: Vec<f64> = ini.list("probe", "lambdas")?.unwrap_or_default();
        if lambdas.is_empty() {
            return Err(ini.fail("probe", "lambdas", "at least one λ is required"));
        }
        let radii: Vec<f64> = ini.list("probe", "radii")?.unwrap_or_default();
        if radii.is_empty() {
            return Err(ini.fail("probe", "radii", "at least one radius is required"));
        }
        let widths = ini.list("probe", "widths")?;
        if matches!(&widths, Some(w) if w.len() != radii.len()) {
            return Err(ini.fail("probe", "widths", "need one width per radius"));
        }
        let probes = ini.get("probe", "probes")?.unwrap_or(4);
        if probes == 0 {
            return Err(ini.fail("probe", "probes", "at least one probe is required"));
        }
        let scales = ini.list("probe", "scales")?.unwrap_or_default();
        Ok(ProbeConfig {
            lambdas,
            radii,
            widths,
            probes,
            scales,
        })
    }

    pub fn converge_sizes(&self) -> Result<Vec<usize>, ConfigError> {
        let ini = &self.ini;
        ini.section("converge")?;
        let sizes: Vec<usize> = ini
            .list("converge", "sizes")?
            .ok_or_else(|| ini.fail("converge", "sizes", "missing key"))?;
        if sizes.len() < 3 {
            return Err(ini.fail(
                "converge",
                "sizes",
                format!("need at least 3 sizes, got {}", sizes.len()),
            ));
        }
        Ok(sizes)
    }

    pub fn converge_reference(&self, spec: &PotentialSpec) -> Result<ReferenceKind, ConfigError> {
        let chosen: Option<String> = self.ini.get("converge", "reference")?;
        let kind = match chosen.as_deref().map(str::to_ascii_lowercase).as_deref() {
            Some("analytic") => ReferenceKind::Analytic,
            Some("richardson") => ReferenceKind::Richardson,
            Some("exact_laplacian") => ReferenceKind::ExactLaplacian,
            Some(other) => {
                return Err(self.ini.fail(
                    "converge",
                    "reference",
                    format!("unknown reference `{other}`"),
                ));
            }
            None => match spec {
                PotentialSpec::Quadratic { .. } => ReferenceKind::Analytic,
                PotentialSpec::Zero => ReferenceKind::ExactLaplacian,
                PotentialSpec::Expression { .. } => ReferenceKind::Richardson,
            },
        };
        match (kind, spec) {
            (ReferenceKind::Analytic, PotentialSpec::Quadratic { .. })
            | (ReferenceKind::Richardson, _) => Ok(kind),
            (ReferenceKind::ExactLaplacian, PotentialSpec::Zero) => Ok(kind),
            _ => Err(self.ini.fail(
                "converge",
                "reference",
                "reference does not apply to this potential",
            )),
        }
    }

    /// Line of a key (or its section) for diagnostics raised after parsing.
    pub fn error_at(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        self.ini.fail(section, key, message)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.ini.has(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OSC: &str = "
# 1D oscillator
[grid]
n = 1
half_widths = 10
points = 1999

[potential]
kind = quadratic
A = 1

[solver]
h = 1
k = 5
";

    #[test]
    fn parses_oscillator() {
        let c = RunConfig::parse(OSC).unwrap();
        let g = c.grid().unwrap();
        assert_eq!((g.n, g.p, g.points.clone()), (1, 0, vec![1999]));
        assert_eq!(c.solver.h, 1.0);
        assert_eq!(c.solver.seed, 0);
        assert_eq!(c.format, OutputFormat::Csv);
        assert!(matches!(
            c.potential_spec().unwrap(),
            PotentialSpec::Quadratic { .. }
        ));
        assert!(c.potential(&g).unwrap().as_quadratic().is_some());
    }

    #[test]
    fn missing_section() {
        let c = RunConfig::parse("[solver]\nh = 0.5\n").unwrap();
        let e = c.grid().unwrap_err();
        assert_eq!(e.section, "grid");
        assert_eq!(e.to_string(), "[grid]: missing section");
    }

    #[test]
    fn bad_value_is_line_anchored() {
        let e = RunConfig::parse("[solver]\n\nk = five\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.key.as_deref(), Some("k"));
        assert!(e
            .to_string()
            .starts_with("line 3: [solver] k: cannot parse `five`"));
    }

    #[test]
    fn h_outside_range() {
        let e = RunConfig::parse("[solver]\nh = 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = RunConfig::parse("[solver]\nh = 0.5\nh0 = 0.25\n").unwrap_err();
        assert!(e.message.contains("outside"));
    }

    #[test]
    fn matrices_and_lists() {
        let c = RunConfig::parse("[grid]\nn = 2\np = 1\nhalf_widths = 4, 4, 6\npoints = 30\n[potential]\nkind = quadratic\nA = 1 0; 0 4\nB = 2\n").unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.points, vec![30, 30, 30]);
        assert_eq!(g.half_widths, vec![4.0, 4.0, 6.0]);
        match c.potential_spec().unwrap() {
            PotentialSpec::Quadratic { a, b } => {
                assert_eq!(a, vec![vec![1.0, 0.0], vec![0.0, 4.0]]);
                assert_eq!(b, vec![vec![2.0]]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert_eq!(RunConfig::parse("k = 1\n").unwrap_err().line, Some(1));
        assert!(RunConfig::parse("[solver\n").is_err());
        assert!(RunConfig::parse("[solver]\nnonsense\n")
            .unwrap_err()
            .message
            .contains("key = value"));
        assert!(RunConfig::parse("[solver]\nk = 1\nk = 2\n")
            .unwrap_err()
            .message
            .contains("duplicate"));
        assert!(RunConfig::parse("[solvers]\n")
            .unwrap_err()
            .message
            .contains("unknown section"));
        let e = RunConfig::parse("[probe]\nlambdas = 1\nseed = 3\n").unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(3), Some("seed")));
    }

    #[test]
    fn empty_lambdas_rejected() {
        let c = RunConfig::parse("[probe]\nlambdas =\nradii = 1\n").unwrap();
        assert_eq!(c.probe().unwrap_err().key.as_deref(), Some("lambdas"));
    }

    #[test]
    fn expression_errors_point_at_the_key() {
        let c = RunConfig::parse("[grid]\nn = 1\nhalf_widths = 5\npoints = 50\n[potential]\nkind = expression\nexpression = x1 + z3\n").unwrap();
        let g = c.grid().unwrap();
        let e = c.potential(&g).unwrap_err();
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("z3"));
    }

    #[test]
    fn two_sizes_rejected() {
        let c = RunConfig::parse("[converge]\nsizes = 100, 200\n").unwrap();
        assert!(c
            .converge_sizes()
            .unwrap_err()
            .message
            .contains("at least 3"));
    }
}
