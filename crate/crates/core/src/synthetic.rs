//! Planted-pathway benchmark: each class owns hyperedges from which its
//! subjects draw most of their member nodes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Split};
use crate::io::{
    serialize_gmt, serialize_split, serialize_subgraphs, stratified_split, GeneSet, GeneSetCatalog,
    IoError,
};
use crate::model::Subgraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub subjects: usize,
    /// Probability that a member is drawn uniformly from all nodes instead of
    /// from the subject's planted hyperedges.
    pub noise: f64,
    pub seed: u64,
    pub planted_per_class: usize,
    pub min_members: usize,
    pub max_members: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            nodes: 200,
            edges: 20,
            classes: 4,
            subjects: 400,
            noise: 0.1,
            seed: 7,
            planted_per_class: 1,
            min_members: 5,
            max_members: 10,
        }
    }
}

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("infeasible synthetic profile: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub catalog: GeneSetCatalog,
    pub dataset: Dataset,
    /// Planted hyperedge indices per class.
    pub planted: Vec<Vec<usize>>,
}

impl SyntheticData {
    pub fn gmt(&self) -> String {
        serialize_gmt(&self.catalog)
    }

    pub fn subgraphs_tsv(&self) -> String {
        serialize_subgraphs(&self.dataset, &self.catalog)
    }

    pub fn split_tsv(&self) -> String {
        let splits: Vec<Split> = self
            .dataset
            .splits
            .iter()
            .map(|s| s.unwrap_or(Split::Train))
            .collect();
        serialize_split(&self.dataset.ids, &splits)
    }
}

fn check(spec: &SyntheticSpec) -> Result<(), SyntheticError> {
    let fail = |m: String| Err(SyntheticError::Infeasible(m));
    if spec.classes == 0 || spec.edges == 0 || spec.subjects == 0 || spec.planted_per_class == 0 {
        return fail("classes, edges, subjects and planted edges per class must be >= 1".into());
    }
    if spec.classes * spec.planted_per_class > spec.edges {
        return fail(format!(
            "{} classes x {} planted edges need more than {} edges",
            spec.classes, spec.planted_per_class, spec.edges
        ));
    }
    if spec.nodes < spec.edges {
        return fail(format!(
            "{} nodes cannot fill {} edges",
            spec.nodes, spec.edges
        ));
    }
    if !(0.0..1.0).contains(&spec.noise) {
        return fail(format!("noise {} outside [0, 1)", spec.noise));
    }
    if spec.min_members == 0 || spec.min_members > spec.max_members {
        return fail("member count range is empty".into());
    }
    Ok(())
}

/// Generates the benchmark deterministically from `spec.seed`.
///
/// Hyperedge `j` is a contiguous block of `nodes / edges` nodes (leftover
/// nodes are dealt round-robin) plus one extra random node per five block
/// members, so neighboring hyperedges overlap. Subject `i` belongs to class
/// `i mod classes`; weights are multiples of 1e-4 in (0, 1].
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData, SyntheticError> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let block = spec.nodes / spec.edges;
    let mut members: Vec<Vec<usize>> = (0..spec.edges)
        .map(|j| (j * block..(j + 1) * block).collect())
        .collect();
    for (k, n) in (spec.edges * block..spec.nodes).enumerate() {
        members[k % spec.edges].push(n);
    }
    for m in members.iter_mut() {
        let own: HashSet<usize> = m.iter().copied().collect();
        let extra = m.len() / 5;
        let mut added = 0;
        while added < extra && own.len() + added < spec.nodes {
            let n = rng.gen_range(0..spec.nodes);
            if !m.contains(&n) {
                m.push(n);
                added += 1;
            }
        }
        m.sort_unstable();
    }

    let mut edge_order: Vec<usize> = (0..spec.edges).collect();
    edge_order.shuffle(&mut rng);
    let planted: Vec<Vec<usize>> = (0..spec.classes)
        .map(|c| {
            let mut p =
                edge_order[c * spec.planted_per_class..(c + 1) * spec.planted_per_class].to_vec();
            p.sort_unstable();
            p
        })
        .collect();
    let classes: Vec<String> = (0..spec.classes).map(|c| format!("C{}", c + 1)).collect();

    let width = |n: usize| n.saturating_sub(1).to_string().len();
    let gene = |n: usize| format!("G{:0w$}", n, w = width(spec.nodes));
    let mut owner = vec![None; spec.edges];
    for (c, p) in planted.iter().enumerate() {
        for &e in p {
            owner[e] = Some(c);
        }
    }
    let sets: Vec<GeneSet> = members
        .iter()
        .enumerate()
        .map(|(j, m)| GeneSet {
            name: format!("PW{:0w$}", j, w = width(spec.edges)),
            description: match owner[j] {
                Some(c) => format!("planted:{}", classes[c]),
                None => "background".into(),
            },
            genes: m.iter().map(|&n| gene(n)).collect(),
        })
        .collect();
    let catalog = GeneSetCatalog::new(sets)?;
    // node indices in the catalog follow first appearance, not generation order
    let to_node: Vec<usize> = (0..spec.nodes)
        .map(|n| catalog.gene_index(&gene(n)).expect("every node is covered"))
        .collect();

    let pools: Vec<Vec<usize>> = planted
        .iter()
        .map(|p| {
            let mut pool: Vec<usize> = p.iter().flat_map(|&e| members[e].iter().copied()).collect();
            pool.sort_unstable();
            pool.dedup();
            pool
        })
        .collect();
    let mut ids = Vec::with_capacity(spec.subjects);
    let mut subgraphs = Vec::with_capacity(spec.subjects);
    let mut labels = Vec::with_capacity(spec.subjects);
    for i in 0..spec.subjects {
        let c = i % spec.classes;
        let size = rng.gen_range(spec.min_members..=spec.max_members);
        let mut nodes = Vec::with_capacity(size);
        let mut weights = Vec::with_capacity(size);
        let mut tries = 0;
        while nodes.len() < size && tries < 100 * size {
            tries += 1;
            let n = if rng.gen::<f64>() < spec.noise {
                rng.gen_range(0..spec.nodes)
            } else {
                *pools[c].choose(&mut rng).expect("planted pool is nonempty")
            };
            let n = to_node[n];
            if !nodes.contains(&n) {
                nodes.push(n);
                weights.push(rng.gen_range(1..=10_000u32) as f64 / 10_000.0);
            }
        }
        ids.push(format!("S{:0w$}", i, w = width(spec.subjects)));
        subgraphs
            .push(Subgraph::new(nodes, weights, spec.nodes).expect("generated members are valid"));
        labels.push(vec![c]);
    }
    let (splits, _) = stratified_split(&labels, [0.6, 0.2, 0.2], spec.seed)?;
    let dataset = Dataset {
        ids,
        subgraphs,
        labels,
        classes,
        splits: splits.into_iter().map(Some).collect(),
    };
    Ok(SyntheticData {
        catalog,
        dataset,
        planted,
    })
}
