use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hypercore::{build_hypergraph, Hypergraph};
use crate::kernel::{grad_check, Tape, Tensor};

type M = Vec<Vec<f64>>;

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> M {
    (0..r)
        .map(|_| (0..c).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect()
}

fn t(m: &M) -> Tensor<f64> {
    Tensor::from_f64_rows(m).unwrap()
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `v · W` for a row vector and an `in × out` matrix.
fn vecmat(v: &[f64], w: &M) -> Vec<f64> {
    (0..w[0].len())
        .map(|o| (0..v.len()).map(|i| v[i] * w[i][o]).sum())
        .collect()
}

struct OracleLayer {
    w_node: M,
    b_node: Vec<f64>,
    w_edge: M,
    b_edge: Vec<f64>,
    c: Vec<f64>,
}

fn oracle_score(l: &OracleLayer, hn: &[f64], he: &[f64], slope: f64) -> f64 {
    let a = vecmat(hn, &l.w_node);
    let b = vecmat(he, &l.w_edge);
    (0..a.len())
        .map(|k| l.c[k] * leaky((a[k] + l.b_node[k]) * (b[k] + l.b_edge[k]), slope))
        .sum()
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// One layer straight from the per-edge and per-node formulas.
fn oracle_layer(h: &Hypergraph, hn: &M, he: &M, l: &OracleLayer, slope: f64) -> (M, M) {
    let d = hn[0].len();
    let mut new_e = vec![vec![0.0; d]; h.num_edges()];
    for (j, members) in h.edge_members().iter().enumerate() {
        let s: Vec<f64> = members
            .iter()
            .map(|&i| oracle_score(l, &hn[i], &he[j], slope))
            .collect();
        let a = softmax(&s);
        for k in 0..d {
            new_e[j][k] = relu(members.iter().zip(&a).map(|(&i, w)| w * hn[i][k]).sum());
        }
    }
    let mut new_n = vec![vec![0.0; d]; h.num_nodes()];
    for (i, edges) in h.node_memberships().iter().enumerate() {
        if edges.is_empty() {
            continue;
        }
        let s: Vec<f64> = edges
            .iter()
            .map(|&j| oracle_score(l, &hn[i], &he[j], slope))
            .collect();
        let a = softmax(&s);
        for k in 0..d {
            new_n[i][k] = relu(edges.iter().zip(&a).map(|(&j, w)| w * he[j][k]).sum());
        }
    }
    (new_n, new_e)
}

fn oracle_edge_mean(h: &Hypergraph, hn: &M) -> M {
    h.edge_members()
        .iter()
        .map(|m| {
            (0..hn[0].len())
                .map(|k| m.iter().map(|&i| hn[i][k]).sum::<f64>() / m.len() as f64)
                .collect()
        })
        .collect()
}

fn random_layer(rng: &mut ChaCha8Rng, d: usize) -> OracleLayer {
    OracleLayer {
        w_node: rand_matrix(rng, d, d, 1.0),
        b_node: rand_matrix(rng, 1, d, 0.5).remove(0),
        w_edge: rand_matrix(rng, d, d, 1.0),
        b_edge: rand_matrix(rng, 1, d, 0.5).remove(0),
        c: rand_matrix(rng, 1, d, 1.0).remove(0),
    }
}

fn layer_vars(tape: &mut Tape<f64>, l: &OracleLayer) -> LayerVars {
    LayerVars {
        w_node: tape.constant(t(&l.w_node)),
        b_node: tape.constant(Tensor::row(l.b_node.clone())),
        w_edge: tape.constant(t(&l.w_edge)),
        b_edge: tape.constant(Tensor::row(l.b_edge.clone())),
        context: tape.constant(Tensor::row(l.c.clone())),
    }
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
    }
}

fn flat(m: &M) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

fn toy_graph() -> Hypergraph {
    build_hypergraph(&[vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]], None).unwrap()
}

fn toy_arch(d: usize, layers: usize, classes: usize, mode: Mode) -> Architecture {
    Architecture {
        num_nodes: 6,
        hidden_dim: d,
        num_layers: layers,
        num_classes: classes,
        mode,
        dropout_rate: 0.0,
        leaky_slope: 0.01,
        pooling: Pooling::Attention,
    }
}

fn toy_subgraphs(rng: &mut ChaCha8Rng) -> Vec<Subgraph> {
    [vec![0, 1], vec![2, 3, 5], vec![4], vec![1, 5]]
        .into_iter()
        .map(|m| {
            let w = m.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            Subgraph::new(m, w, 6).unwrap()
        })
        .collect()
}

#[test]
fn init_edge_states_is_member_mean() {
    let h = build_hypergraph(&[vec![3], vec![0, 4], vec![1, 2, 4]], None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hn = rand_matrix(&mut rng, 5, 3, 1.0);
    let ctx = GraphContext::new(h.clone());
    let mut tape = Tape::new();
    let x = tape.constant(t(&hn));
    let e = init_edge_states(&mut tape, &ctx, x).unwrap();
    let got = tape.value(e).data().to_vec();
    assert_close(&got[..3], &hn[3], 0.0);
    assert_close(&got, &flat(&oracle_edge_mean(&h, &hn)), 1e-12);
}

#[test]
fn hand_evaluated_single_pair_score() {
    let h = build_hypergraph(&[vec![0]], None).unwrap();
    let ctx = GraphContext::<f64>::new(h);
    let mut tape = Tape::new();
    let one = |tape: &mut Tape<f64>, v: f64| tape.constant(Tensor::row(vec![v]));
    let lv = LayerVars {
        w_node: one(&mut tape, 1.0),
        b_node: one(&mut tape, 0.0),
        w_edge: one(&mut tape, 1.0),
        b_edge: one(&mut tape, 0.0),
        context: one(&mut tape, 1.0),
    };
    let hn = one(&mut tape, 2.0);
    let he = one(&mut tape, 3.0);
    let s = dual_attention_scores(&mut tape, &ctx, hn, he, &lv, 0.01).unwrap();
    assert_eq!(tape.value(s.scores).data(), &[6.0]);
    assert_eq!(s.evaluations, 1);
}

#[test]
fn zero_context_gives_uniform_attention() {
    let h = toy_graph();
    let ctx = GraphContext::new(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut l = random_layer(&mut rng, 4);
    l.c = vec![0.0; 4];
    let hn = rand_matrix(&mut rng, 6, 4, 1.0);
    let he = rand_matrix(&mut rng, 3, 4, 1.0);
    let mut tape = Tape::new();
    let lv = layer_vars(&mut tape, &l);
    let (xn, xe) = (tape.constant(t(&hn)), tape.constant(t(&he)));
    let s = dual_attention_scores(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    assert!(tape.value(s.scores).data().iter().all(|&v| v == 0.0));
    // node 1 sits only in edge 0; node 0 in edges 0 and 2 -> unweighted mean of their states
    let nu = node_update(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    let got = tape.value(nu).row_slice(0).to_vec();
    let want: Vec<f64> = (0..4).map(|k| relu((he[0][k] + he[2][k]) / 2.0)).collect();
    assert_close(&got, &want, 1e-12);
    let got = tape.value(nu).row_slice(1).to_vec();
    let want: Vec<f64> = (0..4).map(|k| relu(he[0][k])).collect();
    assert_close(&got, &want, 1e-12);
    // equal scores across a 3-member edge -> ReLU(mean of member states)
    let eu = edge_update(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    let want: Vec<f64> = (0..4)
        .map(|k| relu((hn[0][k] + hn[1][k] + hn[2][k]) / 3.0))
        .collect();
    assert_close(tape.value(eu).row_slice(0), &want, 1e-12);
}

#[test]
fn single_member_edge_copies_member() {
    let h = build_hypergraph(&[vec![1], vec![0, 1, 2]], None).unwrap();
    let ctx = GraphContext::new(h);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let l = random_layer(&mut rng, 3);
    let hn = rand_matrix(&mut rng, 3, 3, 1.0);
    let he = rand_matrix(&mut rng, 2, 3, 1.0);
    let mut tape = Tape::new();
    let lv = layer_vars(&mut tape, &l);
    let (xn, xe) = (tape.constant(t(&hn)), tape.constant(t(&he)));
    let eu = edge_update(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    let want: Vec<f64> = hn[1].iter().map(|&v| relu(v)).collect();
    assert_close(tape.value(eu).row_slice(0), &want, 0.0);
}

#[test]
fn edge_and_node_updates_match_loop_oracle() {
    let h = build_hypergraph(&[vec![0, 1], vec![1, 2]], None).unwrap();
    let ctx = GraphContext::new(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let l = random_layer(&mut rng, 4);
    let hn = rand_matrix(&mut rng, 3, 4, 1.0);
    let he = rand_matrix(&mut rng, 2, 4, 1.0);
    let (on, oe) = oracle_layer(&h, &hn, &he, &l, 0.01);
    let mut tape = Tape::new();
    let lv = layer_vars(&mut tape, &l);
    let (xn, xe) = (tape.constant(t(&hn)), tape.constant(t(&he)));
    let eu = edge_update(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    let nu = node_update(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    assert_close(tape.value(eu).data(), &flat(&oe), 1e-10);
    assert_close(tape.value(nu).data(), &flat(&on), 1e-10);
}

#[test]
fn two_layer_backbone_matches_unrolled_oracle() {
    let h = Hypergraph::new(7, &[vec![0, 1, 2], vec![2, 3], vec![3, 4, 5, 0]], None).unwrap();
    let ctx = GraphContext::new(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let arch = Architecture {
        num_nodes: 7,
        ..toy_arch(5, 2, 3, Mode::Multiclass)
    };
    let params = ModelParams::<f64>::init(arch.clone(), &mut rng);

    let emb: M = (0..7)
        .map(|i| params.node_embeddings.row_slice(i).to_vec())
        .collect();
    let to_m = |t: &Tensor<f64>| -> M { (0..t.rows()).map(|r| t.row_slice(r).to_vec()).collect() };
    let layers: Vec<OracleLayer> = params
        .layers
        .iter()
        .map(|l| OracleLayer {
            w_node: to_m(&l.w_node),
            b_node: l.b_node.data().to_vec(),
            w_edge: to_m(&l.w_edge),
            b_edge: l.b_edge.data().to_vec(),
            c: l.context.data().to_vec(),
        })
        .collect();
    let he0 = oracle_edge_mean(&h, &emb);
    let (n1, e1) = oracle_layer(&h, &emb, &he0, &layers[0], 0.01);
    let (n2, e2) = oracle_layer(&h, &n1, &e1, &layers[1], 0.01);

    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, &params, false);
    let out = forward_backbone(&mut tape, &ctx, &vars, &arch, &mut Phase::Eval).unwrap();
    assert_close(tape.value(out.node_states).data(), &flat(&n2), 1e-9);
    assert_close(tape.value(out.edge_states).data(), &flat(&e2), 1e-9);
    // node 6 has no hyperedge: zero representation
    assert!(tape
        .value(out.node_states)
        .row_slice(6)
        .iter()
        .all(|&v| v == 0.0));

    // K = 1 is one edge update plus one node update from the initial states.
    let arch1 = Architecture {
        num_layers: 1,
        ..arch.clone()
    };
    let mut p1 = params.clone();
    p1.layers.truncate(1);
    p1.arch = arch1.clone();
    let x1 = p1.node_representations(&ctx).unwrap();
    assert_close(x1.data(), &flat(&n1), 1e-12);
}

#[test]
fn dropout_zero_train_equals_eval() {
    let ctx = GraphContext::new(toy_graph());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let arch = toy_arch(4, 2, 3, Mode::Multiclass);
    let params = ModelParams::<f64>::init(arch.clone(), &mut rng);
    let subs = toy_subgraphs(&mut rng);
    let batch = SubgraphBatch::new(&subs);
    let eval = params.predict(&ctx, &batch).unwrap();
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, &params, true);
    let mut drng = ChaCha8Rng::seed_from_u64(0);
    let out = forward(
        &mut tape,
        &ctx,
        &vars,
        &arch,
        &batch,
        &mut Phase::Train(&mut drng),
    )
    .unwrap();
    assert_eq!(tape.value(out.predictions), &eval);

    // with a positive rate the training pass differs
    let arch = Architecture {
        dropout_rate: 0.5,
        ..arch
    };
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, &params, true);
    let out = forward(
        &mut tape,
        &ctx,
        &vars,
        &arch,
        &batch,
        &mut Phase::Train(&mut drng),
    )
    .unwrap();
    assert_ne!(tape.value(out.predictions), &eval);
}

fn brute_force_regularizer(x: &M, theta: &crate::hypercore::SparseMatrix) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            total += d * theta.get(i, j);
        }
    }
    total
}

#[test]
fn regularizer_examples() {
    // Θ with all entries 1/3 on nodes {0, 1}: explicit pairwise sum is 2 · (1/3) · 1.
    let y = crate::hypercore::SparseMatrix {
        rows: 2,
        cols: 2,
        entries: vec![
            (0, 0, 1.0 / 3.0),
            (0, 1, 1.0 / 3.0),
            (1, 0, 1.0 / 3.0),
            (1, 1, 1.0 / 3.0),
        ],
    };
    let x: M = vec![vec![1.0], vec![0.0]];
    assert!((brute_force_regularizer(&x, &y) - 2.0 / 3.0).abs() < 1e-15);

    let h = build_hypergraph(&[vec![0, 1, 2]], None).unwrap();
    let ctx = GraphContext::<f64>::new(h);
    let mut tape = Tape::new();
    let xs = tape.constant(t(&vec![vec![0.7, -1.0]; 3]));
    let r = regularizer(&mut tape, &ctx, xs).unwrap();
    assert!(tape.value(r).item().abs() < 1e-12);

    let h = build_hypergraph(&[vec![0, 1]], None).unwrap();
    let ctx = GraphContext::<f64>::new(h.clone());
    let xs = tape.constant(t(&x));
    let r = regularizer(&mut tape, &ctx, xs).unwrap();
    // single 2-node edge: Θ entries are 1/2, so the pairwise sum is 2 · (1/2) · 1
    assert!((tape.value(r).item() - brute_force_regularizer(&x, &h.theta())).abs() < 1e-12);
    assert!((tape.value(r).item() - 1.0).abs() < 1e-12);
}

#[test]
fn regularizer_matches_pairwise_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..25 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(1..=5);
        let edges: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                (0..rng.gen_range(1..=n))
                    .map(|_| rng.gen_range(0..n))
                    .collect()
            })
            .collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..2.0)).collect();
        let h = Hypergraph::new(n, &edges, Some(&w)).unwrap();
        let ctx = GraphContext::<f64>::new(h.clone());
        let x = rand_matrix(&mut rng, n, 3, 2.0);
        let mut tape = Tape::new();
        let xs = tape.constant(t(&x));
        let r = regularizer(&mut tape, &ctx, xs).unwrap();
        let oracle = brute_force_regularizer(&x, &h.theta());
        assert!((tape.value(r).item() - oracle).abs() <= 1e-10);
        assert!(tape.value(r).item() >= -1e-12);
    }
}

#[test]
fn subgraph_attention_examples() {
    let mut tape = Tape::new();
    // bᵀX = [1, 1]
    let x = tape.constant(t(&vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![3.0, -1.0]]));
    let b = tape.constant(Tensor::row(vec![1.0, 1.0]));
    let s = Subgraph::new(vec![0, 1], vec![0.2, 0.8], 3).unwrap();
    let batch = SubgraphBatch::new([&s]);
    let a = subgraph_attention(&mut tape, &batch, x, b).unwrap();
    let want = [
        0.2f64.exp() / (0.2f64.exp() + 0.8f64.exp()),
        0.8f64.exp() / (0.2f64.exp() + 0.8f64.exp()),
    ];
    assert_close(tape.value(a).data(), &want, 1e-12);
    assert!((want[0] - 0.3543).abs() < 1e-4 && (want[1] - 0.6457).abs() < 1e-4);

    let single = Subgraph::new(vec![2], vec![0.4], 3).unwrap();
    let batch = SubgraphBatch::new([&single]);
    let a = subgraph_attention(&mut tape, &batch, x, b).unwrap();
    assert_eq!(tape.value(a).data(), &[1.0]);
    let r = subgraph_repr(&mut tape, &batch, x, b, Pooling::Attention).unwrap();
    assert_eq!(tape.value(r.representations).data(), &[3.0, 0.0]);

    let zero_b = tape.constant(Tensor::row(vec![0.0, 0.0]));
    let s3 = Subgraph::new(vec![0, 1, 2], vec![0.1, 0.9, 0.5], 3).unwrap();
    let batch = SubgraphBatch::new([&s3]);
    let a = subgraph_attention(&mut tape, &batch, x, zero_b).unwrap();
    assert_close(tape.value(a).data(), &[1.0 / 3.0; 3], 1e-15);
}

#[test]
fn subgraph_repr_matches_direct_formula_and_ignores_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xm = rand_matrix(&mut rng, 4, 3, 1.0);
    let bv = rand_matrix(&mut rng, 1, 3, 1.0).remove(0);
    let mut tape = Tape::new();
    let x = tape.constant(t(&xm));
    let b = tape.constant(Tensor::row(bv.clone()));
    let s = Subgraph::new(vec![1, 3], vec![0.3, 0.9], 4).unwrap();
    let r = subgraph_repr(
        &mut tape,
        &SubgraphBatch::new([&s]),
        x,
        b,
        Pooling::Attention,
    )
    .unwrap();
    let logits: Vec<f64> = [(1, 0.3), (3, 0.9)]
        .iter()
        .map(|&(i, m)| m * xm[i].iter().zip(&bv).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let a = softmax(&logits);
    let want: Vec<f64> = (0..3)
        .map(|k| relu(a[0] * xm[1][k] + a[1] * xm[3][k]))
        .collect();
    assert_close(tape.value(r.representations).data(), &want, 1e-10);

    let s_rev = Subgraph::new(vec![3, 1], vec![0.9, 0.3], 4).unwrap();
    let r2 = subgraph_repr(
        &mut tape,
        &SubgraphBatch::new([&s_rev]),
        x,
        b,
        Pooling::Attention,
    )
    .unwrap();
    assert_close(
        tape.value(r2.representations).data(),
        tape.value(r.representations).data(),
        1e-9,
    );

    let r3 = subgraph_repr(&mut tape, &SubgraphBatch::new([&s]), x, b, Pooling::Sum).unwrap();
    let want: Vec<f64> = (0..3).map(|k| relu(xm[1][k] + xm[3][k])).collect();
    assert_close(tape.value(r3.representations).data(), &want, 1e-12);
    assert!(r3.attention.is_none());
}

fn zero_head(d: usize, f: usize) -> HeadParams<f64> {
    HeadParams {
        hidden: [
            DenseLayer {
                weight: Tensor::zeros(&[d, d]),
                bias: Tensor::zeros(&[1, d]),
            },
            DenseLayer {
                weight: Tensor::zeros(&[d, d]),
                bias: Tensor::zeros(&[1, d]),
            },
        ],
        output: DenseLayer {
            weight: Tensor::zeros(&[d, f]),
            bias: Tensor::zeros(&[1, f]),
        },
    }
}

fn head_vars(tape: &mut Tape<f64>, h: &HeadParams<f64>) -> HeadVars {
    let mut v = |t: &Tensor<f64>| tape.constant(t.clone());
    HeadVars {
        hidden: [
            (v(&h.hidden[0].weight), v(&h.hidden[0].bias)),
            (v(&h.hidden[1].weight), v(&h.hidden[1].bias)),
        ],
        output: (v(&h.output.weight), v(&h.output.bias)),
    }
}

#[test]
fn classifier_head_examples() {
    let mut tape = Tape::new();
    let s = tape.constant(t(&vec![vec![1.0, -2.0], vec![0.5, 0.5], vec![3.0, 1.0]]));
    let hv = head_vars(&mut tape, &zero_head(2, 4));
    let z = classify(&mut tape, s, &hv, Mode::Multiclass, 0.0, &mut Phase::Eval).unwrap();
    assert!(tape
        .value(z)
        .data()
        .iter()
        .all(|&v| (v - 0.25).abs() < 1e-15));

    // Hand computation: S = [1, -2];
    // hidden 1: W = [[1, 0], [0, 1]], b = [0, 1] -> relu([1, -1]) = [1, 0]
    // hidden 2: W = [[2, -1], [1, 1]], b = [0, 0] -> relu([2, -1]) = [2, 0]
    // output:   W = [[1, -1], [0, 0]], b = [0.5, 0] -> logits [2.5, -2]
    let head = HeadParams {
        hidden: [
            DenseLayer {
                weight: t(&vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
                bias: Tensor::row(vec![0.0, 1.0]),
            },
            DenseLayer {
                weight: t(&vec![vec![2.0, -1.0], vec![1.0, 1.0]]),
                bias: Tensor::row(vec![0.0, 0.0]),
            },
        ],
        output: DenseLayer {
            weight: t(&vec![vec![1.0, -1.0], vec![0.0, 0.0]]),
            bias: Tensor::row(vec![0.5, 0.0]),
        },
    };
    let hv = head_vars(&mut tape, &head);
    let s1 = tape.constant(Tensor::row(vec![1.0, -2.0]));
    let z = classify(&mut tape, s1, &hv, Mode::Multiclass, 0.0, &mut Phase::Eval).unwrap();
    let p0 = 1.0 / (1.0 + (-4.5f64).exp());
    assert_close(tape.value(z).data(), &[p0, 1.0 - p0], 1e-12);
    let z = classify(&mut tape, s1, &hv, Mode::Multilabel, 0.0, &mut Phase::Eval).unwrap();
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    assert_close(tape.value(z).data(), &[sig(2.5), sig(-2.0)], 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let arch = toy_arch(3, 1, 5, Mode::Multiclass);
    let p = ModelParams::<f64>::init(arch, &mut rng);
    let hv = head_vars(&mut tape, &p.head);
    let s = tape.constant(t(&rand_matrix(&mut rng, 6, 3, 2.0)));
    let z = classify(&mut tape, s, &hv, Mode::Multiclass, 0.0, &mut Phase::Eval).unwrap();
    for r in 0..6 {
        let sum: f64 = tape.value(z).row_slice(r).iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
}

#[test]
fn loss_examples() {
    let mut tape = Tape::new();
    let y = t(&vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]);
    let perfect = tape.constant(y.clone());
    let l = loss(&mut tape, perfect, &y, None, 1.0, Mode::Multiclass).unwrap();
    assert!(tape.value(l.classification).item().abs() < 1e-12);

    let uniform = tape.constant(Tensor::full(&[2, 3], 1.0 / 3.0));
    let l = loss(&mut tape, uniform, &y, None, 1.0, Mode::Multiclass).unwrap();
    assert!((tape.value(l.total).item() - 2.0 * 3f64.ln()).abs() < 1e-12);

    let reg = tape.constant(Tensor::scalar(5.0));
    let l0 = loss(&mut tape, uniform, &y, Some(reg), 0.0, Mode::Multiclass).unwrap();
    assert_eq!(tape.value(l0.total).item(), tape.value(l.total).item());
    let l2 = loss(&mut tape, uniform, &y, Some(reg), 0.5, Mode::Multiclass).unwrap();
    assert!((tape.value(l2.total).item() - (2.0 * 3f64.ln() + 2.5)).abs() < 1e-12);

    let bad = t(&vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
    assert!(matches!(
        loss(&mut tape, uniform, &bad, None, 1.0, Mode::Multiclass),
        Err(ModelError::InvalidLabel(_))
    ));
    // multilabel allows an empty row: BCE of 0.5 predictions is 3 ln 2 per row
    let half = tape.constant(Tensor::full(&[2, 3], 0.5));
    let l = loss(&mut tape, half, &bad, None, 1.0, Mode::Multilabel).unwrap();
    assert!((tape.value(l.total).item() - 6.0 * 2f64.ln()).abs() < 1e-12);
}

fn toy_objective_check(mode: Mode, pooling: Pooling) {
    let ctx = GraphContext::new(toy_graph());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let arch = Architecture {
        pooling,
        ..toy_arch(4, 2, 3, mode)
    };
    let mut params = ModelParams::<f64>::init(arch.clone(), &mut rng);
    // nonzero biases so their gradients are exercised away from zero
    for t in params.tensors_mut() {
        if t.rows() == 1 {
            for v in t.data_mut() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
    }
    let subs = toy_subgraphs(&mut rng);
    let labels = vec![vec![0], vec![1], vec![2], vec![0, 2]];
    let labels = if mode == Mode::Multiclass {
        vec![vec![0], vec![1], vec![2], vec![1]]
    } else {
        labels
    };
    let batch = SubgraphBatch::new(&subs).with_labels(&labels, 3).unwrap();
    let tensors: Vec<Tensor<f64>> = params.tensors().into_iter().cloned().collect();
    let report = grad_check(
        |tape, vars| {
            let pv = ParamVars::from_vars(vars, arch.num_layers);
            let o =
                objective(tape, &ctx, &pv, &arch, &batch, 1.0, &mut Phase::Eval).map_err(|e| {
                    match e {
                        ModelError::Kernel(k) => k,
                        other => panic!("{other}"),
                    }
                })?;
            Ok(o.loss.total)
        },
        &tensors,
        1e-4,
        1e-4,
    )
    .unwrap();
    assert!(report.passed, "{mode:?} {pooling:?}: {report:?}");
}

#[test]
fn full_objective_gradients_multiclass() {
    toy_objective_check(Mode::Multiclass, Pooling::Attention);
}

#[test]
fn full_objective_gradients_multilabel_and_sum_pooling() {
    toy_objective_check(Mode::Multilabel, Pooling::Attention);
    toy_objective_check(Mode::Multiclass, Pooling::Sum);
}

#[test]
fn dual_graph_with_swapped_parameters_transposes_scores() {
    let h = toy_graph();
    let dual = h.dual().unwrap();
    let ctx = GraphContext::new(h.clone());
    let dctx = GraphContext::new(dual);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let l = random_layer(&mut rng, 4);
    let hn = rand_matrix(&mut rng, 6, 4, 1.0);
    let he = rand_matrix(&mut rng, 3, 4, 1.0);
    let mut tape = Tape::new();
    let lv = layer_vars(&mut tape, &l);
    let swapped = LayerVars {
        w_node: lv.w_edge,
        b_node: lv.b_edge,
        w_edge: lv.w_node,
        b_edge: lv.b_node,
        context: lv.context,
    };
    let (xn, xe) = (tape.constant(t(&hn)), tape.constant(t(&he)));
    let s = dual_attention_scores(&mut tape, &ctx, xn, xe, &lv, 0.01).unwrap();
    let ds = dual_attention_scores(&mut tape, &dctx, xe, xn, &swapped, 0.01).unwrap();
    let a = ctx.pair_matrix(tape.value(s.scores).data());
    let b = dctx.pair_matrix(tape.value(ds.scores).data());
    for j in 0..3 {
        for i in 0..6 {
            assert_eq!(a[j][i].to_bits(), b[i][j].to_bits());
        }
    }
}
