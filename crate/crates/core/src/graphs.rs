//! Graphs, shift operators, and the graph Fourier factorization.
//!
//! A graph enters the pipeline either as an explicit weighted adjacency
//! matrix or as a k-nearest-neighbor construction over point coordinates.
//! From its adjacency one of five shift operators is derived, and the shift's
//! eigendecomposition yields the graph Fourier transform `F_G = V^-1` used by
//! every fractional operator downstream.
//!
//! Determinism notes: eigenpairs are ordered by descending real part with
//! ties broken by descending imaginary part, eigenvector phases follow the
//! `numkit` canonicalization, and k-NN neighbor ties are broken toward the
//! lower vertex index. The ordering rule is recorded on the factorization so
//! serialized reports are self-describing.

use crate::numkit::{self, CMat, CVec, NumKitError};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("adjacency must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("vertex {vertex} has a self loop; the diagonal must be zero")]
    SelfLoop { vertex: usize },
    #[error("undirected graph has asymmetric weights at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("non-finite weight at ({i}, {j})")]
    NonFiniteWeight { i: usize, j: usize },
    #[error("vertex {vertex} has degree {degree}; normalized shifts need positive degrees")]
    IsolatedVertex { vertex: usize, degree: f64 },
    #[error("duplicate points at indices {i} and {j}")]
    DuplicatePoints { i: usize, j: usize },
    #[error("k = {k} is out of range for {n} points (need 1 <= k < n)")]
    BadNeighborCount { k: usize, n: usize },
    #[error("vertex index {index} outside graph of size {n}")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    NumKit(#[from] NumKitError),
}

/// Weighted graph with a zero diagonal. Undirected graphs keep a symmetric
/// adjacency; the flag is validated at construction.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Array2<f64>,
    directed: bool,
}

impl Graph {
    pub fn new(adjacency: Array2<f64>, directed: bool) -> Result<Self, GraphError> {
        let (rows, cols) = adjacency.dim();
        if rows != cols {
            return Err(GraphError::NotSquare { rows, cols });
        }
        for ((i, j), &w) in adjacency.indexed_iter() {
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight { i, j });
            }
            if i == j && w != 0.0 {
                return Err(GraphError::SelfLoop { vertex: i });
            }
        }
        if !directed {
            for i in 0..rows {
                for j in (i + 1)..cols {
                    let d = (adjacency[[i, j]] - adjacency[[j, i]]).abs();
                    let scale = adjacency[[i, j]].abs().max(adjacency[[j, i]].abs());
                    if d > 1e-12 * scale.max(1.0) {
                        return Err(GraphError::Asymmetric { i, j });
                    }
                }
            }
        }
        Ok(Self {
            adjacency,
            directed,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Row-sum degrees.
    pub fn degrees(&self) -> Array1<f64> {
        self.adjacency.sum_axis(ndarray::Axis(1))
    }
}

/// The five shift-operator variants derivable from an adjacency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    Adjacency,
    Laplacian,
    RowNormAdjacency,
    SymNormAdjacency,
    NormLaplacian,
}

impl ShiftKind {
    pub const ALL: [ShiftKind; 5] = [
        ShiftKind::Adjacency,
        ShiftKind::Laplacian,
        ShiftKind::RowNormAdjacency,
        ShiftKind::SymNormAdjacency,
        ShiftKind::NormLaplacian,
    ];
}

impl fmt::Display for ShiftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShiftKind::Adjacency => "adjacency",
            ShiftKind::Laplacian => "laplacian",
            ShiftKind::RowNormAdjacency => "row-norm-adjacency",
            ShiftKind::SymNormAdjacency => "sym-norm-adjacency",
            ShiftKind::NormLaplacian => "norm-laplacian",
        };
        f.write_str(s)
    }
}

impl FromStr for ShiftKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adjacency" => Ok(ShiftKind::Adjacency),
            "laplacian" => Ok(ShiftKind::Laplacian),
            "row-norm-adjacency" => Ok(ShiftKind::RowNormAdjacency),
            "sym-norm-adjacency" => Ok(ShiftKind::SymNormAdjacency),
            "norm-laplacian" => Ok(ShiftKind::NormLaplacian),
            other => Err(format!(
                "unknown shift kind '{other}' (expected adjacency, laplacian, \
                 row-norm-adjacency, sym-norm-adjacency, or norm-laplacian)"
            )),
        }
    }
}

/// Deterministic eigenpair ordering applied by [`gft_factorize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingRule {
    DescendingRealThenImag,
}

/// Graph Fourier factorization `shift = V diag(lambda) V^-1`, `F_G = V^-1`.
#[derive(Debug, Clone)]
pub struct GftFactorization {
    pub shift: CMat,
    /// Eigenvalues sorted by the declared ordering rule.
    pub eigenvalues: CVec,
    /// Eigenvector columns, same order as `eigenvalues`, phase-canonical.
    pub v: CMat,
    /// Forward transform `F_G = V^-1`.
    pub f_g: CMat,
    /// Condition number of `V` (from the defectiveness gate).
    pub cond_v: f64,
    pub ordering: OrderingRule,
}

/// Builds the shift-operator matrix of the requested kind.
///
/// `D` is the diagonal of row sums of the adjacency. Normalized kinds require
/// every degree to be positive.
pub fn shift_operator(g: &Graph, kind: ShiftKind) -> Result<CMat, GraphError> {
    let n = g.n();
    let a = g.adjacency();
    let deg = g.degrees();
    let needs_degrees = !matches!(kind, ShiftKind::Adjacency);
    if needs_degrees && !matches!(kind, ShiftKind::Laplacian) {
        for (vertex, &d) in deg.iter().enumerate() {
            if d <= 0.0 {
                return Err(GraphError::IsolatedVertex { vertex, degree: d });
            }
        }
    }
    let mut z = Array2::<f64>::zeros((n, n));
    match kind {
        ShiftKind::Adjacency => z.assign(a),
        ShiftKind::Laplacian => {
            z.assign(&(-a));
            for i in 0..n {
                z[[i, i]] += deg[i];
            }
        }
        ShiftKind::RowNormAdjacency => {
            for i in 0..n {
                for j in 0..n {
                    z[[i, j]] = a[[i, j]] / deg[i];
                }
            }
        }
        ShiftKind::SymNormAdjacency => {
            for i in 0..n {
                for j in 0..n {
                    z[[i, j]] = a[[i, j]] / (deg[i] * deg[j]).sqrt();
                }
            }
        }
        ShiftKind::NormLaplacian => {
            for i in 0..n {
                for j in 0..n {
                    let norm = a[[i, j]] / (deg[i] * deg[j]).sqrt();
                    z[[i, j]] = if i == j { 1.0 - norm } else { -norm };
                }
            }
        }
    }
    Ok(z.mapv(|v| Complex64::new(v, 0.0)))
}

/// Eigendecomposes a shift operator and inverts the eigenvector basis into
/// the forward graph Fourier transform.
pub fn gft_factorize(z: &CMat) -> Result<GftFactorization, GraphError> {
    let eig = numkit::eig_decompose(z)?;
    let n = eig.values.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (eig.values[a], eig.values[b]);
        vb.re
            .total_cmp(&va.re)
            .then_with(|| vb.im.total_cmp(&va.im))
    });

    let mut eigenvalues = Array1::zeros(n);
    let mut v: CMat = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.values[src];
        v.column_mut(dst).assign(&eig.vectors.column(src));
    }

    let f_g = numkit::solve_linear(&v, &numkit::identity(n))?;
    Ok(GftFactorization {
        shift: z.clone(),
        eigenvalues,
        v,
        f_g,
        cond_v: eig.cond_v,
        ordering: OrderingRule::DescendingRealThenImag,
    })
}

/// Builds a k-nearest-neighbor graph over `coords` (one row per point) with
/// unit weights. Neighbor ties at equal distance go to the lower index. With
/// `symmetrize` the directed adjacency is folded by elementwise max into an
/// undirected graph.
pub fn knn_graph(coords: &Array2<f64>, k: usize, symmetrize: bool) -> Result<Graph, GraphError> {
    let n = coords.nrows();
    if k == 0 || k >= n {
        return Err(GraphError::BadNeighborCount { k, n });
    }
    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d2: f64 = coords
                .row(i)
                .iter()
                .zip(coords.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 == 0.0 {
                return Err(GraphError::DuplicatePoints {
                    i: i.min(j),
                    j: i.max(j),
                });
            }
            dist.push((d2, j));
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for &(_, j) in dist.iter().take(k) {
            a[[i, j]] = 1.0;
        }
    }
    if symmetrize {
        for i in 0..n {
            for j in (i + 1)..n {
                let m = a[[i, j]].max(a[[j, i]]);
                a[[i, j]] = m;
                a[[j, i]] = m;
            }
        }
    }
    Graph::new(a, !symmetrize)
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn looks_like_header(line: &str) -> bool {
    line.split(',')
        .next()
        .map(|f| f.trim().parse::<f64>().is_err())
        .unwrap_or(false)
}

/// Loads an edge-list CSV of `src,dst,weight` rows (0-based vertex indices;
/// weight defaults to 1 when omitted). The vertex count is the largest index
/// plus one unless `n` is given. Undirected loads install each edge in both
/// directions; on duplicate entries the last one wins.
pub fn read_edge_list_csv(
    path: &Path,
    n: Option<usize>,
    directed: bool,
) -> Result<Graph, GraphError> {
    let lines = read_lines(path)?;
    let path_s = path.display().to_string();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut max_idx = 0usize;
    for (idx, (line_no, line)) in lines.iter().enumerate() {
        if idx == 0 && looks_like_header(line) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                path: path_s.clone(),
                line: *line_no,
                msg: format!("expected src,dst[,weight], got {} fields", fields.len()),
            });
        }
        let parse_idx = |s: &str| -> Result<usize, GraphError> {
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                path: path_s.clone(),
                line: *line_no,
                msg: format!("bad vertex index '{s}'"),
            })
        };
        let src = parse_idx(fields[0])?;
        let dst = parse_idx(fields[1])?;
        let weight = if fields.len() == 3 {
            fields[2].parse::<f64>().map_err(|_| GraphError::Parse {
                path: path_s.clone(),
                line: *line_no,
                msg: format!("bad weight '{}'", fields[2]),
            })?
        } else {
            1.0
        };
        max_idx = max_idx.max(src).max(dst);
        edges.push((src, dst, weight));
    }
    let size = match n {
        Some(n) => {
            if max_idx >= n && !edges.is_empty() {
                return Err(GraphError::VertexOutOfRange { index: max_idx, n });
            }
            n
        }
        None => max_idx + 1,
    };
    let mut a = Array2::<f64>::zeros((size, size));
    for (src, dst, w) in edges {
        a[[src, dst]] = w;
        if !directed {
            a[[dst, src]] = w;
        }
    }
    Graph::new(a, directed)
}

/// Loads a coordinates CSV with one point per row (`x,y[,z...]`); every row
/// must have the same dimension.
pub fn read_coords_csv(path: &Path) -> Result<Array2<f64>, GraphError> {
    let lines = read_lines(path)?;
    let path_s = path.display().to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, (line_no, line)) in lines.iter().enumerate() {
        if idx == 0 && looks_like_header(line) {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| GraphError::Parse {
            path: path_s.clone(),
            line: *line_no,
            msg: format!("bad coordinate row '{line}'"),
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(GraphError::Parse {
                    path: path_s.clone(),
                    line: *line_no,
                    msg: format!("expected {} coordinates, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GraphError::Parse {
            path: path_s,
            line: 0,
            msg: "no coordinate rows".into(),
        });
    }
    let d = rows[0].len();
    let mut out = Array2::<f64>::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            out[[i, j]] = x;
        }
    }
    Ok(out)
}
