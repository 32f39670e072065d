//! Pre-trained vector tables in the word2vec text format and the cosine
//! distance kernel shared by every combination mode.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::{EntityCatalog, EntityType, Vocabulary};
use crate::error::{parse_err, Error, Result};

/// Vocabulary-indexed dense vectors, stored row-major in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingSet {
    /// Builds a set from `(token, vector)` rows, enforcing the load invariants.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(Error::Infeasible(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut set = EmbeddingSet {
            dim,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (i, (token, v)) in rows.into_iter().enumerate() {
            set.push(token.into(), &v, i + 1)?;
        }
        Ok(set)
    }

    fn push(&mut self, token: String, v: &[f64], line: usize) -> Result<()> {
        if v.len() != self.dim {
            return Err(parse_err(
                line,
                format!("expected {} components, found {}", self.dim, v.len()),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(line, "non-finite component"));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector { token, line });
        }
        if self.index.contains_key(&token) {
            return Err(Error::DuplicateToken { token, line });
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn row_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.row_index(token).map(|i| self.row(i))
    }

    /// Writes the table in the text format with shortest round-trip decimals.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            write!(out, "{token}")?;
            for x in self.row(i) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// A copy with every row scaled to unit Euclidean norm.
    pub fn normalize(&self) -> EmbeddingSet {
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.dim) {
            let n = norm(row);
            row.iter_mut().for_each(|x| *x /= n);
        }
        out
    }
}

impl Vocabulary for EmbeddingSet {
    fn contains_token(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

/// Loads the text format: a header `N D`, then `N` lines `token c1 … cD`.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingSet> {
    let mut lines = reader.lines().enumerate();
    let (n, dim) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(parse_err(1, "missing header line"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| s.and_then(|v| v.parse::<usize>().ok());
        match (parse(it.next()), parse(it.next()), it.next()) {
            (Some(n), Some(d), None) if d > 0 => break (n, d),
            _ => return Err(parse_err(idx + 1, "header must be \"N D\" with D > 0")),
        }
    };
    let mut set = EmbeddingSet::from_rows(dim, std::iter::empty::<(String, Vec<f64>)>())?;
    let mut components = Vec::with_capacity(dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let token = it.next().unwrap_or_default().to_string();
        components.clear();
        for field in it {
            let x = field
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("invalid component {field:?}")))?;
            components.push(x);
        }
        if set.len() == n {
            return Err(parse_err(
                line_no,
                format!("more than the {n} rows declared in the header"),
            ));
        }
        set.push(token, &components, line_no)?;
    }
    if set.len() != n {
        return Err(parse_err(
            set.len() + 1,
            format!("header declares {n} rows, found {}", set.len()),
        ));
    }
    Ok(set)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 − cos(u, v)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(distance_from_cosine(dot(u, v) / (nu * nv)))
}

#[inline]
pub(crate) fn distance_from_cosine(cos: f64) -> f64 {
    (1.0 - cos).clamp(0.0, 2.0)
}

/// Catalog entities present in an embedding, optionally of one type.
/// Entries are sorted by entity ID.
#[derive(Debug, Clone)]
pub struct EntityVectorView<'a> {
    set: &'a EmbeddingSet,
    entries: Vec<(&'a str, usize)>,
    type_filter: Option<EntityType>,
}

impl<'a> EntityVectorView<'a> {
    pub fn embeddings(&self) -> &'a EmbeddingSet {
        self.set
    }

    pub fn type_filter(&self) -> Option<EntityType> {
        self.type_filter
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &'a str> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    /// `(entity_id, vector)` pairs in ID order.
    pub fn iter(&self) -> impl Iterator<Item = (&'a str, &'a [f64])> + '_ {
        self.entries
            .iter()
            .map(|&(id, row)| (id, self.set.row(row)))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.binary_search_by(|(e, _)| (*e).cmp(id)).is_ok()
    }
}

pub fn entity_view<'a>(
    set: &'a EmbeddingSet,
    catalog: &'a EntityCatalog,
    type_filter: Option<EntityType>,
) -> Result<EntityVectorView<'a>> {
    let entries: Vec<(&'a str, usize)> = catalog
        .ids(type_filter)
        .filter_map(|id| set.row_index(id).map(|row| (id, row)))
        .collect();
    if entries.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(EntityVectorView {
        set,
        entries,
        type_filter,
    })
}
