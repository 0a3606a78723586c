//! Text format for analytic functionals.
//!
//! ```text
//! # comment
//! dim 3
//! 2 0 0 1.0
//! 2 0 1 -0.5
//! 4 0 0 1 2 0.25
//! ```
//!
//! The first non-comment line is `dim D`. Every later line is `k i1 .. ik value`:
//! the coefficient of the `k`-th derivative at zero for the multi-index
//! `(i1, .., ik)`. Indices are zero-based and their order is irrelevant; giving
//! the same sorted index twice is an error. Text after `#` is ignored.

use std::collections::BTreeMap;

use dequant::{AnalyticFunctional, SymmetricForm, MAX_DEGREE};

use crate::error::{CliError, CliResult};

fn parse_error(line: usize, message: impl std::fmt::Display) -> CliError {
    CliError::new("FUNCTIONAL_PARSE", format!("line {line}: {message}"))
}

pub fn parse_functional(text: &str) -> CliResult<AnalyticFunctional> {
    let mut dim: Option<usize> = None;
    let mut forms: BTreeMap<usize, SymmetricForm> = BTreeMap::new();
    let mut seen: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some(d) = dim else {
            if tokens.len() != 2 || tokens[0] != "dim" {
                return Err(parse_error(
                    line_no,
                    "expected `dim D` before any coefficient",
                ));
            }
            let d: usize = tokens[1]
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad dimension `{}`", tokens[1])))?;
            if d == 0 {
                return Err(parse_error(line_no, "dimension must be at least 1"));
            }
            dim = Some(d);
            continue;
        };

        let degree: usize = tokens[0]
            .parse()
            .map_err(|_| parse_error(line_no, format!("bad degree `{}`", tokens[0])))?;
        if degree > MAX_DEGREE {
            return Err(CliError::new(
                "DEGREE_OVER_CAP",
                format!("line {line_no}: degree {degree} exceeds the cap of {MAX_DEGREE}"),
            ));
        }
        if tokens.len() != degree + 2 {
            return Err(parse_error(
                line_no,
                format!("degree {degree} needs {degree} indices and one value"),
            ));
        }
        let mut idx = tokens[1..=degree]
            .iter()
            .map(|t| {
                let i: usize = t
                    .parse()
                    .map_err(|_| parse_error(line_no, format!("bad index `{t}`")))?;
                if i >= d {
                    return Err(parse_error(
                        line_no,
                        format!("index {i} out of range for dim {d}"),
                    ));
                }
                Ok(i)
            })
            .collect::<CliResult<Vec<_>>>()?;
        idx.sort_unstable();
        let value: f64 = tokens[degree + 1]
            .parse()
            .map_err(|_| parse_error(line_no, format!("bad value `{}`", tokens[degree + 1])))?;
        if !value.is_finite() {
            return Err(parse_error(line_no, "value must be finite"));
        }
        if let Some(first) = seen.insert((degree, idx.clone()), line_no) {
            return Err(parse_error(
                line_no,
                format!("coefficient {idx:?} of degree {degree} already given on line {first}"),
            ));
        }
        let form = match forms.entry(degree) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(SymmetricForm::zeros(degree, d)?)
            }
        };
        form.set(&idx, value)?;
    }

    let dim = dim.ok_or_else(|| parse_error(0, "missing `dim D` line"))?;
    Ok(AnalyticFunctional::new(dim, forms.into_values())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_quadratic_plus_quartic() {
        let f = parse_functional("# f\ndim 2\n2 0 0 1.0\n2 1 0 0.5 # off-diagonal\n4 1 0 1 0 2\n")
            .unwrap();
        assert_eq!(f.dim(), 2);
        let h = f.second_derivative();
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 1), 0.5);
        assert_eq!(f.derivative(4).unwrap().get(&[0, 0, 1, 1]), 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        let code = |t: &str| parse_functional(t).unwrap_err().code;
        assert_eq!(code("2 0 0 1"), "FUNCTIONAL_PARSE");
        assert_eq!(code("dim 2\n2 0 1 1\n2 1 0 2"), "FUNCTIONAL_PARSE");
        assert_eq!(code("dim 2\n2 0 2 1"), "FUNCTIONAL_PARSE");
        assert_eq!(code("dim 2\n2 0 1"), "FUNCTIONAL_PARSE");
        assert_eq!(code("dim 1\n9 0 0 0 0 0 0 0 0 0 1"), "DEGREE_OVER_CAP");
        assert_eq!(code("# nothing"), "FUNCTIONAL_PARSE");
    }
}
