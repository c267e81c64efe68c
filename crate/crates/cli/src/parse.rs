use std::fs;
use std::path::Path;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value as ExprValue,
};
use mdisp::impedance::{sample_random_impedance, ImpedanceSpec, Region, RestrictedDomain};
use mdisp::linrel::{LinearRelation, PivotSpace};
use mdisp::maxwell1d::{Maxwell1D, Profile, PulseDirection, PulseSpec};
use mdisp::scalar::{CMat, C};
use mdisp::tracespace::HodgeBasis;
use serde::Deserialize;
use serde_json::Value;

use crate::config::{
    key_values, reject_rest, require_f64, take_f64, take_u64, CliError, CliResult,
};

/// `1.5`, `2i`, `1-0.5i`, `-3e-2+4i`.
pub fn complex(field: &str, s: &str) -> CliResult<C<f64>> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::field(field, format!("`{s}` is not a complex number"));
    if let Ok(x) = t.parse::<f64>() {
        return finite(field, C::new(x, 0.0));
    }
    let body = t.strip_suffix('i').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (a, b) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match b {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ => b.parse::<f64>().map_err(|_| bad())?,
    };
    let re = a.parse::<f64>().map_err(|_| bad())?;
    finite(field, C::new(re, im))
}

fn finite(field: &str, z: C<f64>) -> CliResult<C<f64>> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(CliError::field(field, "value must be finite"))
    }
}

struct DevExpr {
    re: Node<DefaultNumericTypes>,
    im: Option<Node<DefaultNumericTypes>>,
}

impl DevExpr {
    fn parse(src: &str) -> CliResult<Self> {
        let (re, im) = match src.split_once(';') {
            Some((a, b)) => (a, Some(b)),
            None => (src, None),
        };
        let tree = |e: &str| {
            build_operator_tree::<DefaultNumericTypes>(e)
                .map_err(|err| CliError::field("--z", format!("f-dev expression `{e}`: {err}")))
        };
        Ok(Self {
            re: tree(re)?,
            im: im.map(tree).transpose()?,
        })
    }

    /// Evaluates at `x = λ²`; `lambda` is also bound.
    fn eval(&self, x: f64) -> Result<C<f64>, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        ctx.set_value("x".into(), ExprValue::Float(x))
            .map_err(|e| e.to_string())?;
        ctx.set_value("lambda".into(), ExprValue::Float(x.sqrt()))
            .map_err(|e| e.to_string())?;
        let one = |n: &Node<DefaultNumericTypes>| {
            n.eval_number_with_context(&ctx).map_err(|e| e.to_string())
        };
        let re = one(&self.re)?;
        let im = match &self.im {
            Some(n) => one(n)?,
            None => 0.0,
        };
        Ok(C::new(re, im))
    }
}

/// Parses an impedance description against a basis (needed for `random:`
/// and to pre-evaluate `f-dev:` at every Hodge eigenvalue).
pub fn impedance(s: &str, basis: &HodgeBasis<f64>) -> CliResult<ImpedanceSpec<f64>> {
    let field = "--z";
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| CliError::field(field, format!("`{s}` has no `kind:` prefix")))?;
    match kind {
        "const" => Ok(ImpedanceSpec::Constant(complex(field, rest)?)),
        "f-dev" => {
            let expr = DevExpr::parse(rest)?;
            for m in basis.modes() {
                let x = m.lambda * m.lambda;
                let v = expr
                    .eval(x)
                    .map_err(|e| CliError::field(field, format!("f-dev at x = {x}: {e}")))?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(CliError::field(
                        field,
                        format!("f-dev is not finite at x = {x}"),
                    ));
                }
            }
            Ok(ImpedanceSpec::dev_function(rest, move |x: f64| {
                expr.eval(x).unwrap_or(C::new(f64::NAN, f64::NAN))
            }))
        }
        "cap" => {
            let mut kv = key_values(field, rest)?;
            let theta0 = require_f64(field, &mut kv, "theta0")?;
            reject_rest(field, &kv)?;
            Ok(ImpedanceSpec::Indicator(Region::Cap { theta0 }))
        }
        "strip" => {
            let mut kv = key_values(field, rest)?;
            let x0 = require_f64(field, &mut kv, "x0")?;
            let x1 = require_f64(field, &mut kv, "x1")?;
            reject_rest(field, &kv)?;
            if !(x0 < x1) {
                return Err(CliError::field(field, "strip needs x0 < x1"));
            }
            Ok(ImpedanceSpec::Indicator(Region::Strip { x0, x1 }))
        }
        "random" => {
            let mut kv = key_values(field, rest)?;
            let s = require_f64(field, &mut kv, "s")?;
            let seed = take_u64(field, &mut kv, "seed")?
                .ok_or_else(|| CliError::field(field, "missing `seed=`"))?;
            let truncation = take_u64(field, &mut kv, "truncation")?
                .map(|t| t as usize)
                .unwrap_or(basis.surface().modes().len());
            reject_rest(field, &kv)?;
            if !(s > 0.5) {
                return Err(CliError::field(
                    field,
                    format!("random field needs s > 1/2, got {s}"),
                ));
            }
            Ok(sample_random_impedance(basis, s, truncation, seed)?)
        }
        other => Err(CliError::field(
            field,
            format!("unknown impedance kind `{other}` (const, f-dev, cap, strip, random)"),
        )),
    }
}

pub fn domain(s: &str, z: &ImpedanceSpec<f64>) -> CliResult<RestrictedDomain<f64>> {
    let field = "--domain";
    match s.split_once(':') {
        None if s == "full" => Ok(RestrictedDomain::Full),
        None if s == "auto" => Ok(match z {
            ImpedanceSpec::Indicator(_) | ImpedanceSpec::Random(_) => {
                RestrictedDomain::Threshold(mdisp::impedance::DEFAULT_DOMAIN_THRESHOLD)
            }
            _ => RestrictedDomain::Full,
        }),
        Some(("threshold", t)) => {
            let tau: f64 = t
                .parse()
                .map_err(|_| CliError::field(field, format!("`{t}` is not a number")))?;
            if !(tau > 0.0 && tau < 1.0) {
                return Err(CliError::field(field, "threshold must lie in (0, 1)"));
            }
            Ok(RestrictedDomain::Threshold(tau))
        }
        _ => Err(CliError::field(
            field,
            format!("`{s}` is not full, auto or threshold:TAU"),
        )),
    }
}

/// `2.5` or `v0,v1,..@b1,..`.
pub fn profile(field: &str, s: &str) -> CliResult<Profile<f64>> {
    let nums = |t: &str| -> CliResult<Vec<f64>> {
        t.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::field(field, format!("`{x}` is not a number")))
            })
            .collect()
    };
    let p = match s.split_once('@') {
        Some((v, b)) => Profile::piecewise(nums(b)?, nums(v)?),
        None => {
            let v = nums(s)?;
            if v.len() != 1 {
                return Err(CliError::field(
                    field,
                    "several values need breakpoints, e.g. `1,4@0.3`",
                ));
            }
            Profile::constant(v[0])
        }
    };
    p.map_err(|e| CliError::field(field, e))
}

pub fn medium(eps: &str, mu: &str) -> CliResult<Maxwell1D<f64>> {
    Ok(Maxwell1D {
        eps: profile("--eps", eps)?,
        mu: profile("--mu", mu)?,
    })
}

pub fn pulse(s: &str) -> CliResult<PulseSpec<f64>> {
    let field = "--pulse";
    let rest = s
        .strip_prefix("gaussian:")
        .ok_or_else(|| CliError::field(field, "only `gaussian:` pulses are supported"))?;
    let mut kv = key_values(field, rest)?;
    let x0 = take_f64(field, &mut kv, "x0")?.unwrap_or(0.5);
    let width = match take_f64(field, &mut kv, "w")? {
        Some(w) => w,
        None => take_f64(field, &mut kv, "width")?.unwrap_or(0.05),
    };
    let direction = match kv.remove("dir").as_deref() {
        None | Some("standing") => PulseDirection::Standing,
        Some("right") => PulseDirection::Right,
        Some("left") => PulseDirection::Left,
        Some(d) => {
            return Err(CliError::field(
                field,
                format!("`dir={d}` is not standing, right or left"),
            ))
        }
    };
    reject_rest(field, &kv)?;
    if !(width > 0.0) {
        return Err(CliError::field(field, "width must be positive"));
    }
    Ok(PulseSpec {
        x0,
        width,
        direction,
    })
}

fn entry(field: &str, v: &Value) -> CliResult<C<f64>> {
    let bad = || CliError::field(field, format!("`{v}` is neither a number nor [re, im]"));
    match v {
        Value::Number(n) => Ok(C::new(n.as_f64().ok_or_else(bad)?, 0.0)),
        Value::Array(a) if a.len() == 2 => Ok(C::new(
            a[0].as_f64().ok_or_else(bad)?,
            a[1].as_f64().ok_or_else(bad)?,
        )),
        _ => Err(bad()),
    }
}

/// A complex matrix in `{rows, cols, data}` form or as nested rows.
pub fn matrix_value(field: &str, v: &Value) -> CliResult<CMat<f64>> {
    if let Some(obj) = v.as_object() {
        let dim = |k: &str| {
            obj.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| CliError::field(field, format!("missing integer `{k}`")))
        };
        let (r, c) = (dim("rows")?, dim("cols")?);
        let data = obj
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::field(field, "missing array `data`"))?;
        if data.len() != r * c {
            return Err(CliError::field(
                field,
                format!("`data` has {} entries, expected {}", data.len(), r * c),
            ));
        }
        let vals = data
            .iter()
            .map(|x| entry(field, x))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(CMat::from_row_slice(r, c, &vals));
    }
    let rows = v
        .as_array()
        .ok_or_else(|| CliError::field(field, "expected an object or an array of rows"))?;
    let r = rows.len();
    let mut vals = Vec::new();
    let mut c = None;
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| CliError::field(field, "each row must be an array"))?;
        if *c.get_or_insert(row.len()) != row.len() {
            return Err(CliError::field(field, "rows have different lengths"));
        }
        for x in row {
            vals.push(entry(field, x)?);
        }
    }
    Ok(CMat::from_row_slice(r, c.unwrap_or(0), &vals))
}

pub fn read_json(field: &str, path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::field(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::field(field, format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    dim: usize,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    basis: Vec<RelationPair>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationPair {
    f: Vec<[f64; 2]>,
    fp: Vec<[f64; 2]>,
}

pub fn relation(path: &Path) -> CliResult<LinearRelation<f64>> {
    let field = "--file";
    let rf: RelationFile = serde_json::from_value(read_json(field, path)?)
        .map_err(|e| CliError::field(field, format!("{}: {e}", path.display())))?;
    let n = rf.dim;
    let space = match rf.weights {
        Some(w) => PivotSpace::weighted(w).map_err(|e| CliError::field("weights", e))?,
        None => PivotSpace::new(n),
    };
    if space.dim() != n {
        return Err(CliError::field("weights", format!("expected {n} entries")));
    }
    let m = rf.basis.len();
    let mut f = CMat::zeros(n, m);
    let mut fp = CMat::zeros(n, m);
    for (j, pair) in rf.basis.iter().enumerate() {
        if pair.f.len() != n || pair.fp.len() != n {
            return Err(CliError::field(
                &format!("basis[{j}]"),
                format!("f and fp need {n} entries"),
            ));
        }
        for i in 0..n {
            f[(i, j)] = C::new(pair.f[i][0], pair.f[i][1]);
            fp[(i, j)] = C::new(pair.fp[i][0], pair.fp[i][1]);
        }
    }
    Ok(LinearRelation::from_pairs(space, &f, &fp)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(complex("z", "1.5").unwrap(), C::new(1.5, 0.0));
        assert_eq!(complex("z", "2i").unwrap(), C::new(0.0, 2.0));
        assert_eq!(complex("z", "1-0.5i").unwrap(), C::new(1.0, -0.5));
        assert_eq!(complex("z", "-3e-2+4i").unwrap(), C::new(-0.03, 4.0));
        assert_eq!(complex("z", "1+i").unwrap(), C::new(1.0, 1.0));
        assert!(complex("z", "abc").is_err());
    }

    #[test]
    fn dev_expression_binds_x_and_lambda() {
        let e = DevExpr::parse("1 + x; lambda").unwrap();
        assert_eq!(e.eval(4.0).unwrap(), C::new(5.0, 2.0));
        assert!(DevExpr::parse("1 +").map_or(true, |e| e.eval(1.0).is_err()));
        assert!(DevExpr::parse("(1").is_err());
    }

    #[test]
    fn profiles_and_pulses() {
        assert!(profile("eps", "2").unwrap().is_constant());
        assert_eq!(profile("eps", "1,4@0.3").unwrap().at(0.5), 4.0);
        assert!(profile("eps", "1,4").is_err());
        assert!(profile("eps", "-1").is_err());
        let p = pulse("gaussian:x0=0.3,w=0.1,dir=right").unwrap();
        assert_eq!(p.direction, PulseDirection::Right);
        assert!(pulse("gaussian:x0=0.3,bogus=1").is_err());
    }

    #[test]
    fn matrices_in_both_layouts() {
        let a: Value = serde_json::json!({"rows": 2, "cols": 2,
            "data": [[0.1, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, -0.2]]});
        let b: Value = serde_json::json!([[0.1, 0], [0, [0.0, -0.2]]]);
        assert_eq!(
            matrix_value("K", &a).unwrap(),
            matrix_value("K", &b).unwrap()
        );
    }
}
