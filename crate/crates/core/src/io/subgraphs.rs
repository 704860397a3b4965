use std::collections::{BTreeSet, HashSet};

use crate::dataset::Dataset;
use crate::model::Subgraph;

use super::gmt::GeneSetCatalog;
use super::IoError;

/// What to do with a subject none of whose genes are in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyPolicy {
    #[default]
    Reject,
    /// Skip the subject and list it in `excluded`.
    Exclude,
}

/// How the label column is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Every subject needs at least one known label.
    #[default]
    Required,
    /// Empty label fields are accepted; listed labels must be known.
    Optional,
    /// The label column is not read (prediction inputs).
    Ignore,
}

#[derive(Debug, Clone, Default)]
pub struct SubgraphTable {
    pub ids: Vec<String>,
    /// Class indices into `classes`, sorted ascending.
    pub labels: Vec<Vec<usize>>,
    pub subgraphs: Vec<Subgraph>,
    pub classes: Vec<String>,
    /// Member genes missing from the catalog, summed over subjects.
    pub dropped_genes: usize,
    /// Subjects skipped under [`EmptyPolicy::Exclude`].
    pub excluded: Vec<String>,
}

struct Row<'a> {
    line: usize,
    id: &'a str,
    labels: Vec<&'a str>,
    members: Vec<(&'a str, f64)>,
}

fn parse_rows(text: &str) -> Result<Vec<Row<'_>>, IoError> {
    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.strip_suffix('\r').unwrap_or(raw);
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let bad = |reason: String| IoError::MalformedLine { line, reason };
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 3 || f[0].is_empty() {
            return Err(bad(
                "expected subject id, labels and gene:weight members".into()
            ));
        }
        if !ids.insert(f[0]) {
            return Err(IoError::DuplicateSubject(f[0].to_string()));
        }
        let labels: Vec<&str> = f[1]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let mut members = Vec::new();
        for item in f[2].split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (gene, weight) = match item.rsplit_once(':') {
                Some((g, w)) => {
                    let w: f64 = w
                        .parse()
                        .map_err(|_| bad(format!("bad weight in {item:?}")))?;
                    (g, w)
                }
                None => (item, 1.0),
            };
            if gene.is_empty() || !(weight >= 0.0 && weight.is_finite()) {
                return Err(bad(format!("bad member {item:?}")));
            }
            members.push((gene, weight));
        }
        rows.push(Row {
            line,
            id: f[0],
            labels,
            members,
        });
    }
    Ok(rows)
}

/// Reads `subject TAB label[,label...] TAB gene[:weight],...` rows. Missing
/// weights default to 1; genes outside the catalog are dropped and counted.
///
/// With `classes = None` the vocabulary is the sorted set of labels found.
pub fn load_subgraphs(
    text: &str,
    catalog: &GeneSetCatalog,
    classes: Option<&[String]>,
    label_mode: LabelMode,
    empty: EmptyPolicy,
) -> Result<SubgraphTable, IoError> {
    let mut rows = parse_rows(text)?;
    if label_mode == LabelMode::Ignore {
        rows.iter_mut().for_each(|r| r.labels.clear());
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => rows
            .iter()
            .flat_map(|r| r.labels.iter().map(|s| s.to_string()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let mut table = SubgraphTable {
        classes,
        ..Default::default()
    };
    for row in rows {
        if label_mode == LabelMode::Required && row.labels.is_empty() {
            return Err(IoError::MalformedLine {
                line: row.line,
                reason: format!("subject {} has no label", row.id),
            });
        }
        let mut labels = Vec::with_capacity(row.labels.len());
        for l in &row.labels {
            match table.classes.iter().position(|c| c == l) {
                Some(k) => labels.push(k),
                None => {
                    return Err(IoError::UnknownClass {
                        line: row.line,
                        class: l.to_string(),
                    })
                }
            }
        }
        labels.sort_unstable();
        labels.dedup();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (g, w) in &row.members {
            match catalog.gene_index(g) {
                Some(n) => {
                    nodes.push(n);
                    weights.push(*w);
                }
                None => table.dropped_genes += 1,
            }
        }
        if nodes.is_empty() {
            match empty {
                EmptyPolicy::Reject => {
                    return Err(IoError::EmptySubgraph {
                        line: row.line,
                        subject: row.id.to_string(),
                    })
                }
                EmptyPolicy::Exclude => {
                    table.excluded.push(row.id.to_string());
                    continue;
                }
            }
        }
        let sg = Subgraph::new(nodes, weights, catalog.num_genes()).map_err(|e| {
            IoError::MalformedLine {
                line: row.line,
                reason: e.to_string(),
            }
        })?;
        table.ids.push(row.id.to_string());
        table.labels.push(labels);
        table.subgraphs.push(sg);
    }
    if table.dropped_genes > 0 {
        log::warn!(
            "dropped {} member genes not present in the gene set catalog",
            table.dropped_genes
        );
    }
    Ok(table)
}

/// Writes rows in the format read by [`load_subgraphs`].
pub fn serialize_subgraphs(dataset: &Dataset, catalog: &GeneSetCatalog) -> String {
    let mut out = String::new();
    for ((id, labels), sg) in dataset
        .ids
        .iter()
        .zip(&dataset.labels)
        .zip(&dataset.subgraphs)
    {
        let l: Vec<&str> = labels
            .iter()
            .map(|&k| dataset.classes[k].as_str())
            .collect();
        let m: Vec<String> = sg
            .members()
            .iter()
            .zip(sg.weights())
            .map(|(&n, w)| format!("{}:{}", catalog.genes()[n], w))
            .collect();
        out.push_str(&format!("{id}\t{}\t{}\n", l.join(","), m.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_gmt;

    fn catalog() -> GeneSetCatalog {
        parse_gmt("P1\td\tTP53\tBRCA1\nP2\td\tKRAS\tEGFR\n").unwrap()
    }

    #[test]
    fn load_examples() {
        let c = catalog();
        let t = load_subgraphs(
            "# comment\ns1\tC04\tTP53:0.3,BRCA1:1.0\ns2\tC04,C10\tKRAS,NOPE:0.5\n",
            &c,
            None,
            LabelMode::Required,
            EmptyPolicy::Reject,
        )
        .unwrap();
        assert_eq!(t.classes, vec!["C04", "C10"]);
        assert_eq!(t.subgraphs[0].members(), &[0, 1]);
        assert_eq!(t.subgraphs[0].weights(), &[0.3, 1.0]);
        assert_eq!(t.labels[1], vec![0, 1]);
        assert_eq!(t.subgraphs[1].weights(), &[1.0]);
        assert_eq!(t.dropped_genes, 1);
        let text = serialize_subgraphs(&t.clone().into_dataset_with(vec![None; 2]), &c);
        let back =
            load_subgraphs(&text, &c, None, LabelMode::Required, EmptyPolicy::Reject).unwrap();
        assert_eq!(back.subgraphs, t.subgraphs);
        assert_eq!(back.labels, t.labels);
    }

    #[test]
    fn load_errors() {
        let c = catalog();
        let vocab = vec!["C04".to_string()];
        let r = load_subgraphs(
            "s1\tC99\tTP53\n",
            &c,
            Some(&vocab),
            LabelMode::Required,
            EmptyPolicy::Reject,
        );
        assert!(matches!(r, Err(IoError::UnknownClass { line: 1, .. })));
        let r = load_subgraphs(
            "s1\tC04\tX,Y\n",
            &c,
            None,
            LabelMode::Required,
            EmptyPolicy::Reject,
        );
        assert!(matches!(r, Err(IoError::EmptySubgraph { line: 1, .. })));
        let t = load_subgraphs(
            "s1\tC04\tX,Y\ns2\tC04\tKRAS\n",
            &c,
            None,
            LabelMode::Required,
            EmptyPolicy::Exclude,
        )
        .unwrap();
        assert_eq!(t.excluded, vec!["s1"]);
        assert_eq!(t.ids, vec!["s2"]);
        assert!(matches!(
            load_subgraphs(
                "s1\tC04\tTP53\ns1\tC04\tKRAS\n",
                &c,
                None,
                LabelMode::Required,
                EmptyPolicy::Reject
            ),
            Err(IoError::DuplicateSubject(_))
        ));
        assert!(matches!(
            load_subgraphs(
                "s1\tC04\tTP53:abc\n",
                &c,
                None,
                LabelMode::Required,
                EmptyPolicy::Reject
            ),
            Err(IoError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            load_subgraphs(
                "s1\t\tTP53\n",
                &c,
                None,
                LabelMode::Required,
                EmptyPolicy::Reject
            ),
            Err(IoError::MalformedLine { line: 1, .. })
        ));
        let t = load_subgraphs(
            "s1\t\tTP53\n",
            &c,
            Some(&vocab),
            LabelMode::Optional,
            EmptyPolicy::Reject,
        )
        .unwrap();
        assert!(t.labels[0].is_empty());
        let t = load_subgraphs(
            "s1\tC99\tTP53\n",
            &c,
            Some(&vocab),
            LabelMode::Ignore,
            EmptyPolicy::Reject,
        )
        .unwrap();
        assert!(t.labels[0].is_empty());
    }
}
