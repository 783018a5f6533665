//! SMOTE class balancing.
//!
//! Every class below the majority count is topped up with synthetic rows:
//! pick a random class member, one of its k nearest same-class neighbours
//! (Euclidean), a gap `u ~ Uniform(0,1)`, and emit `x + u·(x̂ − x)`.
//! Original rows come first in the output, unmodified; classes are processed
//! in ascending code order so the random stream is reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::{ClassLabel, MeasurementTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteParams {
    /// Neighbours considered per parent row; must be below the class size.
    pub k_neighbors: usize,
    pub seed: u64,
    /// Restrict augmentation to these classes (`None` = every class below
    /// the majority count).
    pub classes: Option<Vec<ClassLabel>>,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            seed: 0,
            classes: None,
        }
    }
}

/// Provenance of one synthetic row: parent and neighbour are row indices
/// into the original table, `gap` the interpolation factor drawn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteRecord {
    pub class: ClassLabel,
    pub parent: usize,
    pub neighbor: usize,
    pub gap: f64,
}

/// Balance all classes up to the majority count. Returns the augmented
/// table (original rows as a prefix) and one [`SmoteRecord`] per synthetic
/// row, in emission order.
pub fn smote(
    table: &MeasurementTable,
    params: &SmoteParams,
) -> Result<(MeasurementTable, Vec<SmoteRecord>)> {
    if params.k_neighbors == 0 {
        return Err(Error::InvalidParameter(
            "k_neighbors must be at least 1".into(),
        ));
    }
    let counts = table.class_counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    let mut out = table.clone();
    let mut records = Vec::new();
    let mut rng = Rng::new(params.seed);

    for class in ClassLabel::ALL {
        let deficit = majority - counts[class.code()];
        if deficit == 0 {
            continue;
        }
        if let Some(allowed) = &params.classes
            && !allowed.contains(&class)
        {
            continue;
        }
        let members = table.rows_of_class(class);
        if members.len() <= params.k_neighbors {
            return Err(Error::ClassTooSmall {
                class,
                size: members.len(),
                k_neighbors: params.k_neighbors,
            });
        }
        let neighbors = nearest_neighbors(table, &members, params.k_neighbors);
        for _ in 0..deficit {
            let pick = rng.below(members.len());
            let parent = members[pick];
            let neighbor = neighbors[pick][rng.below(params.k_neighbors)];
            let gap = rng.next_f64();
            let row: Vec<f64> = table
                .row(parent)
                .iter()
                .zip(table.row(neighbor))
                .map(|(x, x_hat)| x + gap * (x_hat - x))
                .collect();
            out.push_row(&row, class, table.provenance()[parent]);
            records.push(SmoteRecord {
                class,
                parent,
                neighbor,
                gap,
            });
        }
    }
    Ok((out, records))
}

/// For each member, its k nearest same-class neighbours (excluding itself),
/// ties broken toward the lower row index.
fn nearest_neighbors(table: &MeasurementTable, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .map(|&m| {
            let mut dists: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&other| other != m)
                .map(|&other| (squared_distance(table.row(m), table.row(other)), other))
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists.truncate(k);
            dists.into_iter().map(|(_, idx)| idx).collect()
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
