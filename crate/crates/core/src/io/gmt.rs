use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::hypercore::{Hypergraph, HypergraphError};

use super::IoError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    pub genes: Vec<String>,
}

/// Named gene sets plus the gene-symbol → node-index dictionary over their
/// union, indexed in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneSetCatalog {
    sets: Vec<GeneSet>,
    genes: Vec<String>,
    index: HashMap<String, usize>,
}

impl GeneSetCatalog {
    pub fn new(sets: Vec<GeneSet>) -> Result<Self, IoError> {
        let mut names = HashSet::new();
        let mut genes = Vec::new();
        let mut index = HashMap::new();
        let mut clean = Vec::with_capacity(sets.len());
        for s in sets {
            if !names.insert(s.name.clone()) {
                return Err(IoError::DuplicateSet(s.name));
            }
            let mut seen = HashSet::new();
            let members: Vec<String> = s
                .genes
                .into_iter()
                .filter(|g| seen.insert(g.clone()))
                .collect();
            if members.is_empty() {
                return Err(IoError::EmptyGeneSet(s.name));
            }
            for g in &members {
                if !index.contains_key(g) {
                    index.insert(g.clone(), genes.len());
                    genes.push(g.clone());
                }
            }
            clean.push(GeneSet {
                name: s.name,
                description: s.description,
                genes: members,
            });
        }
        Ok(Self {
            sets: clean,
            genes,
            index,
        })
    }

    pub fn sets(&self) -> &[GeneSet] {
        &self.sets
    }

    pub fn genes(&self) -> &[String] {
        &self.genes
    }

    pub fn num_genes(&self) -> usize {
        self.genes.len()
    }

    pub fn gene_index(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn set_names(&self) -> Vec<&str> {
        self.sets.iter().map(|s| s.name.as_str()).collect()
    }

    /// One hyperedge per gene set, unit weights.
    pub fn hypergraph(&self) -> Result<Hypergraph, HypergraphError> {
        let lists: Vec<Vec<usize>> = self
            .sets
            .iter()
            .map(|s| s.genes.iter().map(|g| self.index[g]).collect())
            .collect();
        Hypergraph::new(self.genes.len(), &lists, None)
    }
}

/// Parses `name TAB description TAB gene...` lines. Blank lines are skipped;
/// empty gene fields are ignored.
pub fn parse_gmt(text: &str) -> Result<GeneSetCatalog, IoError> {
    let mut sets = Vec::new();
    let mut names = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let genes: Vec<String> = fields
            .iter()
            .skip(2)
            .filter(|g| !g.is_empty())
            .map(|g| g.to_string())
            .collect();
        if fields.len() < 3 || fields[0].is_empty() || genes.is_empty() {
            return Err(IoError::MalformedLine {
                line: line_no,
                reason: "expected set name, description and at least one gene".into(),
            });
        }
        if !names.insert(fields[0].to_string()) {
            return Err(IoError::DuplicateSet(fields[0].to_string()));
        }
        sets.push(GeneSet {
            name: fields[0].to_string(),
            description: fields[1].to_string(),
            genes,
        });
    }
    GeneSetCatalog::new(sets)
}

pub fn serialize_gmt(catalog: &GeneSetCatalog) -> String {
    let mut out = String::new();
    for s in catalog.sets() {
        out.push_str(&s.name);
        out.push('\t');
        out.push_str(&s.description);
        for g in &s.genes {
            out.push('\t');
            out.push_str(g);
        }
        out.push('\n');
    }
    out
}
