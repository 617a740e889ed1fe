use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{cite_init, embed_text_node, Cited, CpcCode, CpcEmbedder, EmbeddingTable, TfIdfModel};
use crate::numkit::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Text = 0,
    Cpc = 1,
    Cite = 2,
}

impl Modality {
    pub const COUNT: usize = 3;
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Cpc, Modality::Cite];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Cpc => "cpc",
            Modality::Cite => "cite",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown modality {s:?}")))
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Semantic,
    Hierarchy,
    Citation,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Semantic => "semantic",
            EdgeKind::Hierarchy => "hierarchy",
            EdgeKind::Citation => "citation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo {
    pub id: String,
    pub modality: Modality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

/// Nodes of three modalities with a shared feature width.
///
/// Edges are stored once but aggregate in both directions: text nodes receive
/// from every neighbor, cpc and cite nodes only from themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    dim: usize,
    nodes: Vec<NodeInfo>,
    features: Vec<f64>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl HeteroGraph {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            nodes: Vec::new(),
            features: Vec::new(),
            edges: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn count(&self, m: Modality) -> usize {
        self.nodes.iter().filter(|n| n.modality == m).count()
    }

    pub fn add_node(&mut self, id: impl Into<String>, modality: Modality, feature: &[f64]) -> Result<usize> {
        let id = id.into();
        if feature.len() != self.dim {
            return Err(Error::dim("node feature", self.dim, feature.len()));
        }
        if self.index.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate node id {id:?}")));
        }
        let k = self.nodes.len();
        self.index.insert(id.clone(), k);
        self.nodes.push(NodeInfo { id, modality });
        self.features.extend_from_slice(feature);
        Ok(k)
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, kind: EdgeKind) -> Result<()> {
        let n = self.nodes.len();
        if src >= n || dst >= n {
            return Err(Error::Lookup {
                kind: "node",
                key: format!("{}", src.max(dst)),
            });
        }
        self.edges.push(Edge { src, dst, kind });
        Ok(())
    }

    pub fn features(&self) -> Matrix {
        Matrix::from_vec(self.nodes.len(), self.dim, self.features.clone())
            .expect("feature buffer matches node count")
    }

    pub fn set_features(&mut self, m: &Matrix) -> Result<()> {
        m.ensure_shape("graph features", self.nodes.len(), self.dim)?;
        self.features.copy_from_slice(m.data());
        Ok(())
    }

    /// Modalities with at least one node, in canonical order.
    pub fn modalities_present(&self) -> Vec<Modality> {
        Modality::ALL.into_iter().filter(|&m| self.count(m) > 0).collect()
    }

    /// Sources aggregated into each node, ascending, self included.
    pub fn in_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<Vec<usize>> = (0..self.len()).map(|q| vec![q]).collect();
        for e in &self.edges {
            for (p, q) in [(e.src, e.dst), (e.dst, e.src)] {
                if self.nodes[q].modality == Modality::Text {
                    nb[q].push(p);
                }
            }
        }
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
        }
        nb
    }

    /// Same graph with node `k` moved to position `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation of the node indices"));
        }
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut g = Self::new(self.dim);
        let feats = self.features();
        for &k in &inv {
            g.add_node(self.nodes[k].id.clone(), self.nodes[k].modality, feats.row(k))?;
        }
        for e in &self.edges {
            g.add_edge(perm[e.src], perm[e.dst], e.kind)?;
        }
        Ok(g)
    }

    pub fn write_nodes_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        let feats = self.features();
        for (k, n) in self.nodes.iter().enumerate() {
            let values: Vec<String> = feats.row(k).iter().map(f64::to_string).collect();
            writeln!(w, "{}\t{}\t{}", n.id, n.modality, values.join(" "))?;
        }
        Ok(())
    }

    pub fn write_edges_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", self.nodes[e.src].id, self.nodes[e.dst].id, e.kind.name())?;
        }
        Ok(())
    }

    /// Writes `graph_nodes.tsv` and `graph_edges.tsv` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let nodes = dir.join("graph_nodes.tsv");
        let edges = dir.join("graph_edges.tsv");
        let write = |path: &Path, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| {
            let mut buf = Vec::new();
            f(&mut buf).and_then(|_| std::fs::write(path, buf)).map_err(|e| Error::io(path, e))
        };
        write(&nodes, &|b| self.write_nodes_tsv(b))?;
        write(&edges, &|b| self.write_edges_tsv(b))
    }
}

/// A patent record as graph input: sentence token lists and one CPC context.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphRecord {
    pub id: String,
    pub sentences: Vec<Vec<String>>,
    pub cpc: CpcCode,
}

#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: HeteroGraph,
    /// Text node indices per record, in sentence order.
    pub text_nodes: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

pub fn text_node_id(record: &str, sentence: usize) -> String {
    format!("{record}/s{sentence}")
}

pub fn cpc_node_id(code: &CpcCode) -> String {
    format!("cpc:{}", code.render())
}

pub fn cite_node_id(record: &str) -> String {
    format!("cite:{record}")
}

/// One text node per sentence, one cpc node per distinct code and one cite
/// node per citing record.
///
/// Text nodes of a record are linked pairwise (semantic), each to its record's
/// cpc node (hierarchy), and each to the record's cite node (citation). A cite
/// node starts from the tf-idf-weighted sum of its cited records' mean text
/// embeddings. Citation pairs naming unknown records are skipped with a warning.
pub fn build_graph(
    records: &[GraphRecord],
    citations: &[(String, String)],
    tokens: &EmbeddingTable,
    cpc: &CpcEmbedder,
) -> Result<BuiltGraph> {
    let dim = tokens.dim();
    if cpc.dim() != dim {
        return Err(Error::dim("cpc embedding width", dim, cpc.dim()));
    }
    let mut g = HeteroGraph::new(dim);
    let mut text_nodes = Vec::with_capacity(records.len());
    let mut record_index = HashMap::new();
    let mut warnings = Vec::new();

    for (r, rec) in records.iter().enumerate() {
        if record_index.insert(rec.id.as_str(), r).is_some() {
            return Err(Error::invalid(format!("duplicate record id {:?}", rec.id)));
        }
        let mut ids = Vec::with_capacity(rec.sentences.len());
        for (s, sent) in rec.sentences.iter().enumerate() {
            let h = embed_text_node(sent, tokens)?;
            ids.push(g.add_node(text_node_id(&rec.id, s), Modality::Text, &h)?);
        }
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                g.add_edge(a, b, EdgeKind::Semantic)?;
            }
        }
        let cid = cpc_node_id(&rec.cpc);
        let c = match g.node_index(&cid) {
            Some(c) => c,
            None => g.add_node(cid, Modality::Cpc, &cpc.embed(&rec.cpc))?,
        };
        for &t in &ids {
            g.add_edge(t, c, EdgeKind::Hierarchy)?;
        }
        text_nodes.push(ids);
    }

    if !citations.is_empty() {
        let mut cited_by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (citing, cited) in citations {
            match (record_index.get(citing.as_str()), record_index.get(cited.as_str())) {
                (Some(&a), Some(&b)) => cited_by.entry(a).or_default().push(b),
                _ => warnings.push(format!(
                    "citation {citing} -> {cited} names an unknown record; skipped"
                )),
            }
        }
        let docs: Vec<Vec<&String>> = records.iter().map(|r| r.sentences.iter().flatten().collect()).collect();
        let tfidf = TfIdfModel::fit(&docs)?;
        let feats = g.features();
        let mean_text = |r: usize| -> Vec<f64> {
            let ids = &text_nodes[r];
            let mut m = vec![0.0; dim];
            for &t in ids {
                m.iter_mut().zip(feats.row(t)).for_each(|(a, x)| *a += x / ids.len() as f64);
            }
            m
        };
        for (a, cited) in cited_by {
            let embeds: Vec<Vec<f64>> = cited.iter().map(|&b| mean_text(b)).collect();
            let set: Vec<Cited<'_>> = cited
                .iter()
                .zip(&embeds)
                .map(|(&doc, e)| Cited { doc, embedding: e })
                .collect();
            let init = cite_init(&tfidf, a, &set, dim)?;
            let k = g.add_node(cite_node_id(&records[a].id), Modality::Cite, &init.vector)?;
            for &t in &text_nodes[a] {
                g.add_edge(k, t, EdgeKind::Citation)?;
            }
        }
    }
    Ok(BuiltGraph { graph: g, text_nodes, warnings })
}
