//! Scenario files: line-oriented sectioned text, one declaration per line.
//!
//! ```text
//! # a complete intersection
//! [embedding]
//! variables = x:1 y:1
//! section = x, y
//!
//! [options]
//! wmax = 4
//!
//! [cover]
//! order = 3
//!
//! [bundle.N]
//! transition = z^-4
//!
//! [bundle.TX]
//! transition = -z^2
//!
//! [transition]
//! z = z - z^-1*n + z^-3*n^2
//! n = n - 2*z^-2*n^2
//! ```
//!
//! Rationals are written `p/q`, elements in the same grammar the engine
//! prints. Parse errors carry line and column.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn err(line: usize, column: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError { line, column, message: message.into() }
}

/// Raw parsed scenario: sections of ordered key-value pairs.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub sections: BTreeMap<String, Vec<(String, String)>>,
    pub path: String,
}

impl Scenario {
    pub fn parse(path: &str, text: &str) -> Result<Scenario, ScenarioError> {
        let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(stripped) = trimmed.strip_prefix('[') {
                let Some(name) = stripped.strip_suffix(']') else {
                    return Err(err(line, raw.len(), "unterminated section header"));
                };
                let name = name.trim();
                if name.is_empty() {
                    return Err(err(line, 2, "empty section name"));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                let col = raw.len() - raw.trim_start().len() + 1;
                return Err(err(line, col, "expected `key = value` or a `[section]` header"));
            };
            let Some(section) = &current else {
                return Err(err(line, 1, "declaration before any [section] header"));
            };
            sections
                .get_mut(section)
                .unwrap()
                .push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Scenario { sections, path: path.to_string() })
    }

    pub fn load(path: &str) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, 0, format!("cannot read `{path}`: {e}")))?;
        Self::parse(path, &text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)?
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_i64(&self, section: &str, key: &str) -> Result<Option<i64>, ScenarioError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| err(0, 0, format!("[{section}] {key}: `{v}` is not an integer"))),
        }
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }
}

/// The embedding data of a scenario, resolved against the engine types.
pub struct EmbeddingSpec {
    pub variables: Vec<(String, i64)>,
    pub section: Vec<String>,
}

pub fn embedding_spec(sc: &Scenario) -> Result<EmbeddingSpec, ScenarioError> {
    let vars_raw = sc
        .get("embedding", "variables")
        .ok_or_else(|| err(0, 0, "[embedding] needs `variables = name:weight ...`"))?;
    let mut variables = Vec::new();
    for tok in vars_raw.split_whitespace() {
        let (name, weight) = match tok.split_once(':') {
            Some((n, w)) => (
                n.to_string(),
                w.parse::<i64>()
                    .map_err(|_| err(0, 0, format!("bad weight in `{tok}`")))?,
            ),
            None => (tok.to_string(), 1),
        };
        if weight <= 0 {
            return Err(err(0, 0, format!("variable `{name}` needs positive weight")));
        }
        variables.push((name, weight));
    }
    if variables.is_empty() {
        return Err(err(0, 0, "[embedding] variables must be nonempty"));
    }
    let section_raw = sc
        .get("embedding", "section")
        .ok_or_else(|| err(0, 0, "[embedding] needs `section = s1, s2, ...`"))?;
    let section: Vec<String> =
        section_raw.split(',').map(|s| s.trim().to_string()).collect();
    if section.is_empty() || section.iter().all(String::is_empty) {
        return Err(err(0, 0, "[embedding] section must be nonempty"));
    }
    Ok(EmbeddingSpec { variables, section })
}

/// Build the Koszul data of the scenario's embedding.
pub fn build_embedding(sc: &Scenario) -> Result<nbhd_core::resolve::KoszulData, ScenarioError> {
    let spec = embedding_spec(sc)?;
    let vars: Vec<(&str, i64)> =
        spec.variables.iter().map(|(n, w)| (n.as_str(), *w)).collect();
    let base = nbhd_core::gca::BaseRing::polynomial(&vars);
    let sections: Vec<&str> = spec.section.iter().map(String::as_str).collect();
    nbhd_core::resolve::build_koszul(base, &sections)
        .map_err(|e| err(0, 0, format!("[embedding] {e}")))
}

/// Cover + transition data resolved into engine types.
pub struct CoverSpec {
    pub cover: nbhd_core::obstructions::ChartCover,
    pub phi: nbhd_core::obstructions::FilteredAutomorphism,
}

pub fn build_cover(sc: &Scenario, order_override: Option<u32>) -> Result<CoverSpec, ScenarioError> {
    use nbhd_core::obstructions as obs;
    if !sc.has_section("cover") {
        return Err(err(0, 0, "this check needs a [cover] section"));
    }
    let declared_order = sc
        .get_i64("cover", "order")?
        .ok_or_else(|| err(0, 0, "[cover] needs `order = m`"))? as u32;
    let order = order_override.unwrap_or(declared_order);
    if order > declared_order && sc.get("transition", "preset").is_none() {
        return Err(err(
            0,
            0,
            format!(
                "requested order {order} exceeds the scenario's transition data (order {declared_order})"
            ),
        ));
    }
    // parse the bundle transitions in a scratch cover's overlap ring;
    // rank-one bundles, so each matrix is a single Laurent element
    let scratch = obs::ChartCover::p1(order, (1, 0), (1, 0));
    let parse_el = |section: &str| -> Result<nbhd_core::gca::GcaElement, ScenarioError> {
        let raw = sc
            .get(section, "transition")
            .ok_or_else(|| err(0, 0, format!("[{section}] needs `transition = element`")))?;
        nbhd_core::gca::parse_element_or_zero(&scratch.overlap, raw)
            .map_err(|e| err(0, 0, format!("[{section}] transition: {e}")))
    };
    let conormal = parse_el("bundle.N")?;
    let tangent = parse_el("bundle.TX")?;
    let single = |el: &nbhd_core::gca::GcaElement,
                  what: &str|
     -> Result<(i64, i64), ScenarioError> {
        if el.terms.len() != 1 {
            return Err(err(0, 0, format!("{what} transition must be a single Laurent monomial")));
        }
        let (m, c) = el.terms.iter().next().unwrap();
        if m.gen_exps.iter().any(|&e| e != 0) {
            return Err(err(0, 0, format!("{what} transition must live in the base ring")));
        }
        let Some(ci) = c.to_integer_checked() else {
            return Err(err(0, 0, format!("{what} transition coefficient must be an integer")));
        };
        Ok((ci, m.var_exps[0]))
    };
    let cover = obs::ChartCover::p1(order, single(&conormal, "[bundle.N]")?, single(&tangent, "[bundle.TX]")?);
    let phi = match sc.get("transition", "preset") {
        Some("conic") => obs::conic_cocycle(&cover),
        Some("diagonal") => obs::diagonal_cocycle(&cover),
        Some("line-gauged") => obs::line_cocycle(&cover),
        Some("identity") => obs::FilteredAutomorphism::identity(&cover),
        Some(other) => return Err(err(0, 0, format!("unknown transition preset `{other}`"))),
        None => {
            let z_raw = sc
                .get("transition", "z")
                .ok_or_else(|| err(0, 0, "[transition] needs `z = element` (or a preset)"))?;
            let n_raw = sc
                .get("transition", "n")
                .ok_or_else(|| err(0, 0, "[transition] needs `n = element`"))?;
            let z_img = nbhd_core::gca::parse_element_or_zero(&cover.overlap, z_raw)
                .map_err(|e| err(0, 0, format!("[transition] z: {e}")))?;
            let n_img = nbhd_core::gca::parse_element_or_zero(&cover.overlap, n_raw)
                .map_err(|e| err(0, 0, format!("[transition] n: {e}")))?;
            let z_img = cover.overlap.truncate(&z_img, &cover.caps);
            let n_img = cover.overlap.truncate(&n_img, &cover.caps);
            obs::FilteredAutomorphism::from_images(&cover, z_img, n_img)
        }
    };
    Ok(CoverSpec { cover, phi })
}

trait RatExt {
    fn to_integer_checked(&self) -> Option<i64>;
}

impl RatExt for nbhd_core::exactlin::Rat {
    fn to_integer_checked(&self) -> Option<i64> {
        use num_traits::{One, ToPrimitive};
        if !self.denom().is_one() {
            return None;
        }
        self.numer().to_i64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_pairs() {
        let text = "# comment\n[embedding]\nvariables = x:1 y:1\nsection = x, y\n\n[options]\nwmax = 4\n";
        let sc = Scenario::parse("test.scn", text).unwrap();
        assert_eq!(sc.get("embedding", "variables"), Some("x:1 y:1"));
        assert_eq!(sc.get_i64("options", "wmax").unwrap(), Some(4));
    }

    #[test]
    fn rejects_malformed_lines_with_location() {
        let e = Scenario::parse("t", "[a]\nnonsense line\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Scenario::parse("t", "loose = pair\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = Scenario::parse("t", "[unterminated\n").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn embedding_resolves_to_koszul_data() {
        let text = "[embedding]\nvariables = x y\nsection = x, y\n";
        let sc = Scenario::parse("t", text).unwrap();
        let k = build_embedding(&sc).unwrap();
        assert_eq!(k.rank(), 2);
    }

    #[test]
    fn zero_weight_rejected() {
        let text = "[embedding]\nvariables = x:0\nsection = x\n";
        let sc = Scenario::parse("t", text).unwrap();
        assert!(build_embedding(&sc).is_err());
    }
}
