use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortDataset, Group};
use crate::error::{Error, Result};

/// How view weights are assigned from group labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `|B|/|A|` for A's patients, `−1` for B's.
    Subtraction { a: Group, b: Group },
    /// `1` for the group's patients, nothing for the rest.
    SingleGroup { group: Group },
    /// `1` for everybody.
    WholeCohort,
    /// Caller-supplied weight per group; groups not listed contribute nothing.
    Explicit { weights: BTreeMap<Group, f64> },
}

impl WeightScheme {
    /// Two-letter tag in the style `am` (AD−MCI), `ac`, `mc`; `ad`/`mci`/`cn`
    /// for single groups; `all` for the whole cohort.
    pub fn tag(&self) -> String {
        let initial = |g: Group| g.as_str()[..1].to_ascii_lowercase();
        match self {
            WeightScheme::Subtraction { a, b } => format!("{}{}", initial(*a), initial(*b)),
            WeightScheme::SingleGroup { group } => group.as_str().to_ascii_lowercase(),
            WeightScheme::WholeCohort => "all".into(),
            WeightScheme::Explicit { .. } => "explicit".into(),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Subtraction { a, b } => write!(f, "subtraction {a}-{b}"),
            WeightScheme::SingleGroup { group } => write!(f, "single-group:{group}"),
            WeightScheme::WholeCohort => f.write_str("whole-cohort"),
            WeightScheme::Explicit { weights } => {
                f.write_str("explicit")?;
                for (g, w) in weights {
                    write!(f, " {g}={w}")?;
                }
                Ok(())
            }
        }
    }
}

/// Per-patient view weights `α_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewWeighting {
    pub weights: BTreeMap<String, f64>,
    pub description: String,
    pub scheme: WeightScheme,
}

impl ViewWeighting {
    pub fn weight(&self, patient_id: &str) -> Option<f64> {
        self.weights.get(patient_id).copied()
    }

    /// Per-group weight actually assigned (first patient of each group).
    pub fn group_weights(&self, dataset: &CohortDataset) -> BTreeMap<Group, f64> {
        let mut out = BTreeMap::new();
        for p in &dataset.patients {
            if let Some(w) = self.weight(&p.id) {
                out.entry(p.group).or_insert(w);
            }
        }
        out
    }
}

pub fn make_view_weights(dataset: &CohortDataset, scheme: &WeightScheme) -> Result<ViewWeighting> {
    let nonempty = |g: Group| -> Result<usize> {
        match dataset.group_size(g) {
            0 => Err(Error::EmptyGroup(g.to_string())),
            n => Ok(n),
        }
    };
    let per_group: BTreeMap<Group, f64> = match scheme {
        WeightScheme::Subtraction { a, b } => {
            if a == b {
                return Err(Error::Config(format!("cannot subtract group {a} from itself")));
            }
            let na = nonempty(*a)?;
            let nb = nonempty(*b)?;
            [(*a, nb as f64 / na as f64), (*b, -1.0)].into()
        }
        WeightScheme::SingleGroup { group } => {
            nonempty(*group)?;
            [(*group, 1.0)].into()
        }
        WeightScheme::WholeCohort => {
            if dataset.patients.is_empty() {
                return Err(Error::Config("dataset has no patients".into()));
            }
            Group::ALL.iter().map(|&g| (g, 1.0)).collect()
        }
        WeightScheme::Explicit { weights } => {
            for (g, w) in weights {
                nonempty(*g)?;
                if !w.is_finite() {
                    return Err(Error::Config(format!("weight for {g} is not finite")));
                }
            }
            weights.clone()
        }
    };
    let weights = dataset
        .patients
        .iter()
        .filter_map(|p| per_group.get(&p.group).map(|&w| (p.id.clone(), w)))
        .collect();

    let description = match scheme {
        WeightScheme::Subtraction { a, b } => format!(
            "{}=({}/{}){}-{}",
            scheme.tag(),
            dataset.group_size(*b),
            dataset.group_size(*a),
            a.as_str().to_ascii_lowercase(),
            b.as_str().to_ascii_lowercase()
        ),
        other => other.to_string(),
    };
    Ok(ViewWeighting {
        weights,
        description,
        scheme: scheme.clone(),
    })
}
