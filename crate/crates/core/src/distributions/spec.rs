//! JSON and shorthand distribution specs.
//!
//! ```text
//! {"family":"bernoulli","p":"1/2"}
//! {"family":"geometric","p":"1/3","tail_epsilon":1e-16}
//! {"pmf":["1/3","1/3","1/3"]}
//! {"family":"even_lattice","base":{"family":"bernoulli","p":"1/2"}}
//! ```
//!
//! Shorthand: `bernoulli(1/3)`, `geometric(1/2)`, `pmf(1/2,0,1/2)`,
//! `even(bernoulli(1/2))`.

use serde_json::{json, Map, Value};

use super::{ClaimDistribution, ClaimKind};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational};

/// Parses either a JSON spec or the shorthand form.
pub fn parse_distribution(text: &str) -> Result<ClaimDistribution> {
    let t = text.trim();
    if t.starts_with('{') {
        let value: Value = serde_json::from_str(t)
            .map_err(|e| Error::invalid("dist", format!("malformed JSON: {e}")))?;
        ClaimDistribution::from_json(&value)
    } else {
        parse_shorthand(t)
    }
}

impl ClaimDistribution {
    pub fn from_json(value: &Value) -> Result<Self> {
        from_value(value, "dist")
    }

    /// Canonical JSON form (sorted keys, rationals as `"num/den"`).
    pub fn to_json(&self) -> Value {
        let mut v = match self.kind() {
            ClaimKind::Tabulated(pmf) => {
                json!({ "pmf": pmf.iter().map(format_rational).collect::<Vec<_>>() })
            }
            ClaimKind::Bernoulli(p) => json!({ "family": "bernoulli", "p": format_rational(p) }),
            ClaimKind::Geometric(p) => json!({ "family": "geometric", "p": format_rational(p) }),
            ClaimKind::EvenLattice(base) => json!({ "family": "even_lattice", "base": base.to_json() }),
        };
        if self.support_max().is_none() {
            v["tail_epsilon"] = json!(self.tail_epsilon());
        }
        v
    }
}

fn from_value(value: &Value, path: &str) -> Result<ClaimDistribution> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::invalid(path, "expected a JSON object"))?;
    let family = match obj.get("family") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(Error::invalid(format!("{path}.family"), "expected a string")),
        None if obj.contains_key("pmf") => "tabulated",
        None => {
            return Err(Error::invalid(
                path,
                "missing `family` (bernoulli|geometric|even_lattice) or `pmf`",
            ))
        }
    };
    let dist = match family {
        "bernoulli" => ClaimDistribution::bernoulli(rational_field(obj, "p", path)?),
        "geometric" => ClaimDistribution::geometric(rational_field(obj, "p", path)?),
        "tabulated" => {
            let arr = obj
                .get("pmf")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::invalid(format!("{path}.pmf"), "expected an array"))?;
            let pmf = arr
                .iter()
                .enumerate()
                .map(|(k, v)| rational_value(v, &format!("{path}.pmf[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            ClaimDistribution::tabulated(pmf)
        }
        "even_lattice" => {
            let base = obj
                .get("base")
                .ok_or_else(|| Error::invalid(format!("{path}.base"), "missing base distribution"))?;
            ClaimDistribution::even_lattice(from_value(base, &format!("{path}.base"))?)
        }
        other => {
            return Err(Error::invalid(
                format!("{path}.family"),
                format!("unknown family `{other}`"),
            ))
        }
    }
    .map_err(|e| prefix_field(e, path))?;

    match obj.get("tail_epsilon") {
        None => Ok(dist),
        Some(v) => {
            let eps = v.as_f64().filter(|e| *e > 0.0 && *e < 1.0).ok_or_else(|| {
                Error::invalid(format!("{path}.tail_epsilon"), "expected a number in (0, 1)")
            })?;
            Ok(dist.with_tail_epsilon(eps))
        }
    }
}

fn prefix_field(e: Error, path: &str) -> Error {
    match e {
        Error::InvalidDistribution { field, reason } if !field.starts_with(path) => {
            Error::InvalidDistribution {
                field: format!("{path}.{field}"),
                reason,
            }
        }
        other => other,
    }
}

fn rational_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Rational> {
    let field = format!("{path}.{key}");
    let v = obj
        .get(key)
        .ok_or_else(|| Error::invalid(&field, "missing field"))?;
    rational_value(v, &field)
}

fn rational_value(v: &Value, field: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s)
            .ok_or_else(|| Error::invalid(field, format!("`{s}` is not a rational \"num/den\""))),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap().into())),
        Value::Number(_) => Err(Error::invalid(
            field,
            "floating-point literal; write the value as a \"num/den\" string",
        )),
        _ => Err(Error::invalid(field, "expected a \"num/den\" string")),
    }
}

fn parse_shorthand(text: &str) -> Result<ClaimDistribution> {
    let bad = || {
        Error::invalid(
            "dist",
            format!("cannot parse `{text}`; expected a JSON spec or e.g. bernoulli(1/3)"),
        )
    };
    let open = text.find('(').ok_or_else(bad)?;
    if !text.ends_with(')') {
        return Err(bad());
    }
    let name = text[..open].trim().to_ascii_lowercase();
    let inner = &text[open + 1..text.len() - 1];
    let scalar = |field: &str| {
        parse_rational(inner)
            .ok_or_else(|| Error::invalid(field, format!("`{inner}` is not a rational")))
    };
    match name.as_str() {
        "bernoulli" | "b" => ClaimDistribution::bernoulli(scalar("dist.p")?),
        "geometric" | "geom" | "g" => ClaimDistribution::geometric(scalar("dist.p")?),
        "pmf" | "tabulated" => {
            let pmf = inner
                .split(',')
                .enumerate()
                .map(|(k, s)| {
                    parse_rational(s).ok_or_else(|| {
                        Error::invalid(format!("dist.pmf[{k}]"), format!("`{}` is not a rational", s.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ClaimDistribution::tabulated(pmf)
        }
        "even" | "even_lattice" => ClaimDistribution::even_lattice(parse_shorthand(inner.trim())?),
        _ => Err(bad()),
    }
    .map_err(|e| prefix_field(e, "dist"))
}
