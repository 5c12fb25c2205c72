//! Scalar expressions in config files, evaluated with `meval`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static BUILTINS: RefCell<meval::Context<'static>> = RefCell::new(meval::Context::new());
}

/// A number or an expression string, kept exactly as written so that a
/// rendered spec parses back to the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprSrc {
    Number(f64),
    Text(String),
}

impl From<f64> for ExprSrc {
    fn from(x: f64) -> Self {
        ExprSrc::Number(x)
    }
}

impl From<&str> for ExprSrc {
    fn from(s: &str) -> Self {
        ExprSrc::Text(s.to_string())
    }
}

impl fmt::Display for ExprSrc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprSrc::Number(x) => write!(f, "{x}"),
            ExprSrc::Text(s) => f.write_str(s),
        }
    }
}

struct Vars<'a> {
    names: &'a [String],
    values: &'a [f64],
}

impl meval::ContextProvider for Vars<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

#[derive(Clone)]
enum Body {
    Constant(f64),
    Parsed(Arc<meval::Expr>, Arc<str>),
}

/// An expression compiled against a fixed list of variable names.
#[derive(Clone)]
pub struct CompiledExpr {
    body: Body,
    names: Arc<[String]>,
}

impl fmt::Debug for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledExpr").field("names", &self.names).finish_non_exhaustive()
    }
}

impl CompiledExpr {
    /// Parses `src` and checks that it only uses `names` and builtin
    /// functions. Failures are reported as validation errors at `path`.
    pub fn compile(src: &ExprSrc, names: &[String], path: &str) -> Result<Self> {
        let names: Arc<[String]> = names.into();
        let body = match src {
            ExprSrc::Number(x) => Body::Constant(*x),
            ExprSrc::Text(s) => {
                let e: meval::Expr = s.parse().map_err(|e| Error::Validation {
                    path: path.to_string(),
                    constraint: format!("invalid expression {s:?}: {e}"),
                })?;
                let probe = vec![0.5; names.len()];
                let check = BUILTINS.with(|b| {
                    e.eval_with_context((
                        Vars {
                            names: &names,
                            values: &probe,
                        },
                        &*b.borrow(),
                    ))
                });
                if let Err(err @ (meval::Error::UnknownVariable(_) | meval::Error::Function(..))) = check {
                    return Err(Error::Validation {
                        path: path.to_string(),
                        constraint: format!("{err} in {s:?} (allowed variables: {})", names.join(", ")),
                    });
                }
                Body::Parsed(Arc::new(e), s.as_str().into())
            }
        };
        Ok(Self { body, names })
    }

    /// Value at `values` (in the order of the compiled names); NaN when the
    /// expression cannot be evaluated.
    pub fn eval(&self, values: &[f64]) -> f64 {
        match &self.body {
            Body::Constant(x) => *x,
            Body::Parsed(e, _) => BUILTINS.with(|b| {
                e.eval_with_context((
                    Vars {
                        names: &self.names,
                        values,
                    },
                    &*b.borrow(),
                ))
                .unwrap_or(f64::NAN)
            }),
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.body {
            Body::Constant(_) => true,
            Body::Parsed(_, src) => !src
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .any(|tok| self.names.iter().any(|n| n == tok)),
        }
    }
}

/// Position variables of an `n`-dimensional chart: `x1..xn`, plus `x, y, z`
/// for the first three coordinates.
pub fn position_names(n: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    names.extend(["x", "y", "z"].iter().take(n).map(|s| s.to_string()));
    names
}

/// Values matching [`position_names`].
pub fn position_values(p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    v.extend(p.iter().take(3));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_positions() {
        let names = position_names(2);
        let e = CompiledExpr::compile(&"1 + x^2 + 2*x2".into(), &names, "m").unwrap();
        assert_eq!(e.eval(&position_values(&[2.0, 3.0])), 11.0);
        assert!(!e.is_constant());
        let c = CompiledExpr::compile(&"sin(0)/2 + 1/2".into(), &names, "m").unwrap();
        assert_eq!(c.eval(&position_values(&[0.0, 0.0])), 0.5);
        assert!(c.is_constant());
    }

    #[test]
    fn unknown_variable_is_validation_error() {
        let err = CompiledExpr::compile(&"w + 1".into(), &position_names(2), "metric.r").unwrap_err();
        assert!(matches!(err, Error::Validation { ref path, .. } if path == "metric.r"));
    }
}
