//! Post-hoc reading of a trained model: per-class hyperedge rankings from
//! learned attention, and hyperedge representation similarity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::hypercore::Hypergraph;
use crate::kernel::{Real, Tape, Tensor};
use crate::model::{
    forward_backbone, subgraph_attention, GraphContext, ModelError, ModelParams, ParamVars, Phase,
    Pooling, Subgraph, SubgraphBatch,
};

/// Name of the attention aggregation used by [`rank_hyperedges`].
pub const AGGREGATION_RULE: &str = "subgraph-attention-x-node-edge-attention-class-mean";

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("class {0:?} has no subjects")]
    EmptyClass(String),
    #[error("class index {0} out of range")]
    UnknownClass(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEdge {
    pub edge: usize,
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRanking {
    pub class: String,
    pub subjects: usize,
    pub edges: Vec<RankedEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub rule: String,
    /// Message passing layer whose node-over-edge attention is used (1-based).
    pub layer: usize,
    pub classes: Vec<ClassRanking>,
}

/// Attention mass per hyperedge, averaged over `subjects`.
///
/// Each subject's member attention `a(G_j, g)` is spread over the hyperedges
/// containing `g` in proportion to the final-layer node-over-edge attention
/// `a_N(g, p)`. Under sum pooling members get equal shares.
pub fn edge_attention_mass<T: Real>(
    params: &ModelParams<T>,
    hypergraph: &Hypergraph,
    subjects: &[&Subgraph],
) -> Result<Vec<f64>, ModelError> {
    let p64 = params.cast::<f64>();
    let ctx = GraphContext::<f64>::new(hypergraph.clone());
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, &p64, false);
    let out = forward_backbone(&mut tape, &ctx, &vars, &p64.arch, &mut Phase::Eval)?;
    let a_n = tape
        .value(
            out.layers
                .last()
                .expect("at least one layer")
                .node_attention,
        )
        .data()
        .to_vec();
    let mut node_pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ctx.num_nodes()];
    for (p, (e, n)) in ctx.pairs().enumerate() {
        node_pairs[n].push((e, p));
    }

    let batch = SubgraphBatch::<f64>::new(subjects.iter().copied());
    let member_attention: Vec<f64> = match p64.arch.pooling {
        Pooling::Attention => {
            let a = subgraph_attention(&mut tape, &batch, out.node_states, vars.subgraph_context)?;
            tape.value(a).data().to_vec()
        }
        Pooling::Sum => subjects
            .iter()
            .flat_map(|s| std::iter::repeat(1.0 / s.members().len() as f64).take(s.members().len()))
            .collect(),
    };
    let mut mass = vec![0.0; ctx.num_edges()];
    for (slot, &node) in batch.member_nodes().iter().enumerate() {
        for &(e, p) in &node_pairs[node] {
            mass[e] += member_attention[slot] * a_n[p];
        }
    }
    let n = subjects.len().max(1) as f64;
    Ok(mass.into_iter().map(|m| m / n).collect())
}

fn ranked(mass: Vec<f64>, names: &[String], top_k: usize) -> Vec<RankedEdge> {
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(top_k)
        .map(|e| RankedEdge {
            edge: e,
            name: names[e].clone(),
            score: mass[e],
        })
        .collect()
}

/// Top `top_k` hyperedges for subjects labeled with `class`, by descending
/// attention mass; ties go to the lower hyperedge index.
pub fn rank_hyperedges<T: Real>(
    params: &ModelParams<T>,
    hypergraph: &Hypergraph,
    dataset: &Dataset,
    class: usize,
    top_k: usize,
    edge_names: &[String],
) -> Result<Vec<RankedEdge>, InterpretError> {
    let name = dataset
        .classes
        .get(class)
        .ok_or(InterpretError::UnknownClass(class))?;
    let subjects: Vec<&Subgraph> = dataset
        .subgraphs
        .iter()
        .zip(&dataset.labels)
        .filter(|(_, l)| l.contains(&class))
        .map(|(s, _)| s)
        .collect();
    if subjects.is_empty() {
        return Err(InterpretError::EmptyClass(name.clone()));
    }
    let mass = edge_attention_mass(params, hypergraph, &subjects)?;
    Ok(ranked(mass, edge_names, top_k))
}

/// Rankings for every class that has at least one subject.
pub fn enrichment_report<T: Real>(
    params: &ModelParams<T>,
    hypergraph: &Hypergraph,
    dataset: &Dataset,
    top_k: usize,
    edge_names: &[String],
) -> Result<EnrichmentReport, InterpretError> {
    let mut classes = Vec::new();
    for (c, name) in dataset.classes.iter().enumerate() {
        let subjects = dataset.labels.iter().filter(|l| l.contains(&c)).count();
        let edges = match rank_hyperedges(params, hypergraph, dataset, c, top_k, edge_names) {
            Ok(e) => e,
            Err(InterpretError::EmptyClass(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        classes.push(ClassRanking {
            class: name.clone(),
            subjects,
            edges,
        });
    }
    Ok(EnrichmentReport {
        rule: AGGREGATION_RULE.into(),
        layer: params.arch.num_layers,
        classes,
    })
}

/// Cosine similarity between rows; rows with zero norm are similar to nothing.
pub fn cosine_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let n = rows.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                rows[i]
                    .iter()
                    .zip(&rows[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / (norms[i] * norms[j])
            };
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    out
}

/// `|E| × |E|` cosine similarity of the final-layer hyperedge representations.
pub fn hyperedge_correlation<T: Real>(
    params: &ModelParams<T>,
    hypergraph: &Hypergraph,
) -> Result<Vec<Vec<f64>>, ModelError> {
    let p64 = params.cast::<f64>();
    let ctx = GraphContext::<f64>::new(hypergraph.clone());
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, &p64, false);
    let out = forward_backbone(&mut tape, &ctx, &vars, &p64.arch, &mut Phase::Eval)?;
    let e: &Tensor<f64> = tape.value(out.edge_states);
    let rows: Vec<Vec<f64>> = (0..e.rows()).map(|r| e.row_slice(r).to_vec()).collect();
    Ok(cosine_matrix(&rows))
}

pub fn report_tsv(report: &EnrichmentReport) -> String {
    let mut out = format!(
        "# rule\t{}\n# layer\t{}\nclass\trank\thyperedge\tscore\n",
        report.rule, report.layer
    );
    for c in &report.classes {
        for (r, e) in c.edges.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                c.class,
                r + 1,
                e.name,
                e.score
            ));
        }
    }
    out
}

pub fn correlation_tsv(matrix: &[Vec<f64>], names: &[String]) -> String {
    let mut out = String::from("hyperedge");
    for n in names {
        out.push('\t');
        out.push_str(n);
    }
    out.push('\n');
    for (row, n) in matrix.iter().zip(names) {
        out.push_str(n);
        for v in row {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::hypercore::build_hypergraph;
    use crate::model::{Architecture, Mode};
    use rand::SeedableRng;

    fn arch(n: usize, pooling: Pooling) -> Architecture {
        Architecture {
            num_nodes: n,
            hidden_dim: 4,
            num_layers: 2,
            num_classes: 2,
            mode: Mode::Multiclass,
            dropout_rate: 0.0,
            leaky_slope: 0.01,
            pooling,
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("E{i}")).collect()
    }

    fn dataset(subgraphs: Vec<Subgraph>, labels: Vec<Vec<usize>>) -> Dataset {
        Dataset {
            ids: (0..subgraphs.len()).map(|i| format!("s{i}")).collect(),
            splits: vec![Some(Split::Train); subgraphs.len()],
            subgraphs,
            labels,
            classes: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn single_member_in_single_edge_gets_all_mass() {
        let h = build_hypergraph(&[vec![0], vec![1, 2]], None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let p = ModelParams::<f64>::init(arch(3, Pooling::Attention), &mut rng);
        let ds = dataset(
            vec![Subgraph::unweighted(vec![0], 3).unwrap()],
            vec![vec![0]],
        );
        let r = rank_hyperedges(&p, &h, &ds, 0, 10, &names(2)).unwrap();
        assert_eq!(r[0].edge, 0);
        assert!((r[0].score - 1.0).abs() < 1e-12);
        assert_eq!(r.len(), 2);
        assert!(matches!(
            rank_hyperedges(&p, &h, &ds, 1, 10, &names(2)),
            Err(InterpretError::EmptyClass(_))
        ));
    }

    #[test]
    fn mass_sums_to_one_and_ignores_subject_order() {
        let h = build_hypergraph(
            &[vec![0, 1, 2], vec![2, 3], vec![3, 4, 0], vec![1, 4]],
            None,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for pooling in [Pooling::Attention, Pooling::Sum] {
            let p = ModelParams::<f64>::init(arch(5, pooling), &mut rng);
            let subs = vec![
                Subgraph::new(vec![0, 2, 3], vec![0.2, 0.9, 0.5], 5).unwrap(),
                Subgraph::new(vec![4, 1], vec![0.6, 0.1], 5).unwrap(),
                Subgraph::new(vec![3], vec![1.0], 5).unwrap(),
            ];
            let fwd: Vec<&Subgraph> = subs.iter().collect();
            let rev: Vec<&Subgraph> = subs.iter().rev().collect();
            let a = edge_attention_mass(&p, &h, &fwd).unwrap();
            let b = edge_attention_mass(&p, &h, &rev).unwrap();
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(a.iter().all(|&x| x >= 0.0));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_examples_and_symmetry() {
        let m = cosine_matrix(&[
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 3.0],
            vec![0.0, 0.0],
        ]);
        assert!((m[0][1] - 1.0).abs() < 1e-15);
        assert_eq!(m[0][2], 0.0);
        assert_eq!(m[3][3], 0.0);
        assert!((m[2][2] - 1.0).abs() < 1e-15);

        let h = build_hypergraph(&[vec![0, 1, 2], vec![2, 3], vec![3, 4, 0]], None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let p = ModelParams::<f32>::init(arch(5, Pooling::Attention), &mut rng);
        let c = hyperedge_correlation(&p, &h).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i][j] - c[j][i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn ties_break_by_index_and_top_k_truncates() {
        let r = ranked(vec![0.2, 0.5, 0.2, 0.1], &names(4), 3);
        assert_eq!(r.iter().map(|e| e.edge).collect::<Vec<_>>(), vec![1, 0, 2]);
    }
}
