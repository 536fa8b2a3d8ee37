use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Real,
    Holomorphic,
}

/// Coordinate symbols plus the conjugation involution pairing them.
///
/// In a holomorphic chart `z` and `z*` are independent symbols; the
/// involution only records which is which. Real symbols pair with
/// themselves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateChart {
    names: Vec<String>,
    conjugation: Vec<usize>,
    kind: ChartKind,
}

impl CoordinateChart {
    pub fn new(names: Vec<String>, conjugation: Vec<usize>, kind: ChartKind) -> Result<Self> {
        let n = names.len();
        if conjugation.len() != n {
            return Err(Error::Format("conjugation length differs from names".into()));
        }
        for (i, &j) in conjugation.iter().enumerate() {
            if j >= n || conjugation[j] != i {
                return Err(Error::Format(format!(
                    "conjugation is not an involution at `{}`",
                    names[i]
                )));
            }
            if kind == ChartKind::Real && i != j {
                return Err(Error::Format("real charts must be self-paired".into()));
            }
        }
        for (i, a) in names.iter().enumerate() {
            if crate::poly::is_parameter(a) || a == "i" || a.is_empty() {
                return Err(Error::Format(format!("reserved or empty symbol `{a}`")));
            }
            if names[..i].contains(a) {
                return Err(Error::Format(format!("duplicate symbol `{a}`")));
            }
        }
        Ok(CoordinateChart {
            names,
            conjugation,
            kind,
        })
    }

    pub fn real<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let conjugation = (0..names.len()).collect();
        CoordinateChart::new(names, conjugation, ChartKind::Real).expect("valid real chart")
    }

    /// Holomorphic chart `z1.., z1*..`: all unstarred symbols first, then
    /// their partners in the same order.
    pub fn holomorphic<S: AsRef<str>>(base: impl IntoIterator<Item = S>) -> Self {
        let base: Vec<String> = base.into_iter().map(|s| s.as_ref().to_string()).collect();
        let n = base.len();
        let mut names = base.clone();
        names.extend(base.iter().map(|s| format!("{s}*")));
        let conjugation = (0..2 * n).map(|i| (i + n) % (2 * n)).collect();
        CoordinateChart::new(names, conjugation, ChartKind::Holomorphic)
            .expect("valid holomorphic chart")
    }

    /// Mixed chart where some symbols are real and others are paired.
    pub fn mixed(names: Vec<String>, conjugation: Vec<usize>) -> Result<Self> {
        CoordinateChart::new(names, conjugation, ChartKind::Holomorphic)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn conjugation(&self) -> &[usize] {
        &self.conjugation
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Conjugate partner of a symbol; parameters and unknown symbols map to
    /// themselves.
    pub fn partner(&self, name: &str) -> String {
        match self.index_of(name) {
            Some(i) => self.names[self.conjugation[i]].clone(),
            None => name.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugation_is_an_involution() {
        let c = CoordinateChart::holomorphic(["a1", "a2"]);
        for s in c.names() {
            assert_eq!(c.partner(&c.partner(s)), *s);
        }
        assert_eq!(c.partner("a2"), "a2*");
    }

    #[test]
    fn broken_pairing_is_rejected() {
        let names = vec!["b".to_string(), "b*".to_string()];
        assert!(CoordinateChart::new(names.clone(), vec![1, 1], ChartKind::Holomorphic).is_err());
        assert!(CoordinateChart::new(names, vec![1, 0], ChartKind::Real).is_err());
        assert!(CoordinateChart::new(vec!["beta".into()], vec![0], ChartKind::Real).is_err());
    }
}
