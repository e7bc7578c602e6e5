use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Implementation of a named `fx` operator: children in link order, then
/// the operator's parameters.
pub type FunctionImpl =
    Arc<dyn Fn(&[f64], &BTreeMap<String, f64>) -> Result<f64, String> + Send + Sync>;

/// Named functions available to `fx` operators.
#[derive(Clone)]
pub struct FunctionRegistry {
    functions: BTreeMap<String, FunctionImpl>,
}

impl fmt::Debug for FunctionRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.functions.keys()).finish()
    }
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        FunctionRegistry {
            functions: BTreeMap::new(),
        }
    }

    /// `avg`, `sum`, `min`, `max`, `weighted_sum` (w1..wn) and `linear` (a, b).
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("sum", |xs, _| Ok(xs.iter().sum()));
        r.register("avg", |xs, _| {
            nonempty(xs)?;
            Ok(xs.iter().sum::<f64>() / xs.len() as f64)
        });
        r.register("min", |xs, _| {
            nonempty(xs)?;
            Ok(xs.iter().copied().fold(f64::INFINITY, f64::min))
        });
        r.register("max", |xs, _| {
            nonempty(xs)?;
            Ok(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        });
        r.register("weighted_sum", |xs, params| {
            if params.len() != xs.len() {
                return Err(format!(
                    "weighted_sum needs one weight per child: {} weights, {} children",
                    params.len(),
                    xs.len()
                ));
            }
            xs.iter()
                .enumerate()
                .map(|(i, x)| {
                    let key = format!("w{}", i + 1);
                    params
                        .get(&key)
                        .map(|w| w * x)
                        .ok_or_else(|| format!("weighted_sum is missing parameter `{key}`"))
                })
                .sum()
        });
        r.register("linear", |xs, params| {
            if xs.len() != 1 {
                return Err(format!("linear takes exactly one child, got {}", xs.len()));
            }
            let get = |k: &str| {
                params
                    .get(k)
                    .copied()
                    .ok_or_else(|| format!("linear is missing parameter `{k}`"))
            };
            Ok(get("a")? * xs[0] + get("b")?)
        });
        r
    }

    pub fn register<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: Fn(&[f64], &BTreeMap<String, f64>) -> Result<f64, String> + Send + Sync + 'static,
    {
        self.functions.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&FunctionImpl> {
        self.functions.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }
}

fn nonempty(xs: &[f64]) -> Result<(), String> {
    if xs.is_empty() {
        Err("needs at least one child".to_string())
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(name: &str, xs: &[f64], params: &[(&str, f64)]) -> Result<f64, String> {
        let r = FunctionRegistry::builtin();
        let p = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        (r.get(name).unwrap())(xs, &p)
    }

    #[test]
    fn avg_of_one_is_identity() {
        assert_eq!(call("avg", &[7.25], &[]), Ok(7.25));
    }

    #[test]
    fn builtins() {
        assert_eq!(call("sum", &[1.0, 2.0, 3.0], &[]), Ok(6.0));
        assert_eq!(call("min", &[3.0, -1.0], &[]), Ok(-1.0));
        assert_eq!(call("max", &[3.0, -1.0], &[]), Ok(3.0));
        assert_eq!(call("linear", &[4.0], &[("a", 2.0), ("b", 1.0)]), Ok(9.0));
        assert_eq!(
            call("weighted_sum", &[1.0, 2.0], &[("w1", 0.5), ("w2", 2.0)]),
            Ok(4.5)
        );
    }

    #[test]
    fn weighted_sum_needs_matching_weights() {
        assert!(call("weighted_sum", &[1.0, 2.0], &[("w1", 0.5)]).is_err());
        assert!(call("weighted_sum", &[1.0], &[("w2", 0.5)]).is_err());
    }
}
