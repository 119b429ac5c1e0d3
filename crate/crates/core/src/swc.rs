//! SWC reconstruction files.
//!
//! An SWC data line has seven whitespace-separated columns:
//! `id structure_code x y z radius parent_id`, with `parent_id = -1` marking
//! the root. Lines starting with `#` and blank lines are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::Vec3;

/// One data line of an SWC file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwcRecord {
    pub id: i64,
    pub structure_code: i32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub radius: f64,
    pub parent_id: i64,
}

impl SwcRecord {
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }
}

fn parse_int(field: &str, name: &str, line: usize) -> Result<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    // Some exporters write integral columns as "12.0".
    match field.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            message: format!("{name} field {field:?} is not an integer"),
        }),
    }
}

fn parse_real(field: &str, name: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("{name} field {field:?} is not a finite number"),
        }),
    }
}

/// Parses SWC text into records, one per data line, in file order.
///
/// Line numbers in errors are 1-based. Duplicate ids are rejected here;
/// parent references are checked by [`NeuronTree::from_records`].
pub fn parse_swc(bytes: &[u8]) -> Result<Vec<SwcRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        Error::Parse {
            line,
            message: "input is not valid UTF-8".into(),
        }
    })?;

    let mut records = Vec::new();
    let mut seen: HashMap<i64, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let id = parse_int(fields[0], "id", line)?;
        if id < 1 {
            return Err(Error::Parse {
                line,
                message: format!("id {id} is not a positive integer"),
            });
        }
        let structure_code = parse_int(fields[1], "structure code", line)? as i32;
        let x = parse_real(fields[2], "x", line)?;
        let y = parse_real(fields[3], "y", line)?;
        let z = parse_real(fields[4], "z", line)?;
        let radius = parse_real(fields[5], "radius", line)?;
        if radius < 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("negative radius {radius}"),
            });
        }
        let parent_id = parse_int(fields[6], "parent id", line)?;
        if seen.insert(id, line).is_some() {
            return Err(Error::DuplicateId { line, id });
        }
        records.push(SwcRecord {
            id,
            structure_code,
            x,
            y,
            z,
            radius,
            parent_id,
        });
    }
    Ok(records)
}

/// A sample point of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    /// SWC id of the record this vertex came from.
    pub id: i64,
    pub position: Vec3,
    pub radius: f64,
    pub structure_code: i32,
}

/// A validated rooted tree of sample points.
///
/// Vertices keep the order of the records they were built from. Child lists are
/// ordered the same way, which fixes the depth-first traversal used for path
/// decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronTree {
    vertices: Vec<Vertex>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    leaves: Vec<usize>,
}

impl NeuronTree {
    /// Builds the tree rooted at the unique record with `parent_id == -1`.
    pub fn from_records(records: &[SwcRecord]) -> Result<Self> {
        let roots: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.parent_id == -1)
            .map(|(i, _)| i)
            .collect();
        if roots.len() != 1 {
            return Err(Error::MultiRoot { count: roots.len() });
        }
        Self::assemble(records)
    }

    /// Like [`from_records`](Self::from_records), but when several records are
    /// roots only the connected component with the most vertices is kept
    /// (earliest root wins ties).
    pub fn from_records_largest_root(records: &[SwcRecord]) -> Result<Self> {
        let roots = records.iter().filter(|r| r.parent_id == -1).count();
        if roots == 0 {
            return Err(Error::MultiRoot { count: 0 });
        }
        if roots == 1 {
            return Self::assemble(records);
        }
        let index = id_index(records)?;
        // Component label = index of the root reached by following parents.
        let mut label: Vec<Option<usize>> = vec![None; records.len()];
        for start in 0..records.len() {
            let mut chain = Vec::new();
            let mut cur = start;
            let found = loop {
                if let Some(l) = label[cur] {
                    break l;
                }
                if records[cur].parent_id == -1 {
                    break cur;
                }
                chain.push(cur);
                if chain.len() > records.len() {
                    return Err(Error::Structure(format!(
                        "cycle through sample id {}",
                        records[start].id
                    )));
                }
                cur = index[&records[cur].parent_id];
            };
            label[cur] = Some(found);
            for c in chain {
                label[c] = Some(found);
            }
        }
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for l in label.iter().flatten() {
            *sizes.entry(*l).or_default() += 1;
        }
        let best = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.parent_id == -1)
            .map(|(i, _)| i)
            .max_by(|a, b| sizes[a].cmp(&sizes[b]).then(b.cmp(a)))
            .expect("at least one root");
        let kept: Vec<SwcRecord> = records
            .iter()
            .zip(&label)
            .filter(|(_, l)| **l == Some(best))
            .map(|(r, _)| *r)
            .collect();
        log::warn!(
            "{} roots found; keeping the largest component ({} of {} samples)",
            roots,
            kept.len(),
            records.len()
        );
        Self::assemble(&kept)
    }

    fn assemble(records: &[SwcRecord]) -> Result<Self> {
        let index = id_index(records)?;
        let n = records.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (i, r) in records.iter().enumerate() {
            if r.parent_id == -1 {
                root = Some(i);
                continue;
            }
            let p = index[&r.parent_id];
            if p == i {
                return Err(Error::Structure(format!(
                    "sample id {} is its own parent",
                    r.id
                )));
            }
            parent[i] = Some(p);
            children[p].push(i);
        }
        let root = root.ok_or(Error::MultiRoot { count: 0 })?;

        // Every vertex must be reachable from the root.
        let mut reached = vec![false; n];
        let mut stack = vec![root];
        let mut count = 0;
        while let Some(v) = stack.pop() {
            reached[v] = true;
            count += 1;
            stack.extend(children[v].iter().copied());
        }
        if count != n {
            let first = reached.iter().position(|r| !r).unwrap();
            return Err(Error::Structure(format!(
                "sample id {} is not connected to the root (cycle)",
                records[first].id
            )));
        }

        let vertices = records
            .iter()
            .map(|r| Vertex {
                id: r.id,
                position: r.position(),
                radius: r.radius,
                structure_code: r.structure_code,
            })
            .collect();
        let leaves = (0..n).filter(|&v| children[v].is_empty()).collect();
        Ok(Self {
            vertices,
            parent,
            children,
            root,
            leaves,
        })
    }

    pub fn from_swc_str(text: &str) -> Result<Self> {
        Self::from_records(&parse_swc(text.as_bytes())?)
    }

    /// Reads and validates an SWC file. Errors carry the file path.
    pub fn from_file(path: impl AsRef<Path>, take_largest_root: bool) -> Result<Self> {
        let path = path.as_ref();
        let load = || -> Result<Self> {
            let bytes = std::fs::read(path)?;
            let records = parse_swc(&bytes)?;
            if take_largest_root {
                Self::from_records_largest_root(&records)
            } else {
                Self::from_records(&records)
            }
        };
        load().map_err(|e| e.in_file(path))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// Shifts every position so the root sits at the origin.
    pub fn translate_to_origin(&self) -> Self {
        let offset = self.vertices[self.root].position;
        let mut out = self.clone();
        for v in &mut out.vertices {
            v.position -= offset;
        }
        out
    }

    /// Applies `f` to every position.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            v.position = f(v.position);
        }
        out
    }

    /// Removes vertices sitting exactly on their parent's position, attaching
    /// their children to the parent. Returns the cleaned tree and how many
    /// vertices were dropped.
    pub fn collapse_duplicates(&self) -> (Self, usize) {
        let n = self.len();
        let dup: Vec<bool> = (0..n)
            .map(|v| match self.parent[v] {
                Some(p) => self.vertices[p].position == self.vertices[v].position,
                None => false,
            })
            .collect();
        let dropped = dup.iter().filter(|d| **d).count();
        if dropped == 0 {
            return (self.clone(), 0);
        }
        // Nearest surviving ancestor for each vertex.
        let survivor = |mut v: usize| {
            while dup[v] {
                v = self.parent[v].expect("root is never a duplicate");
            }
            v
        };
        let records: Vec<SwcRecord> = (0..n)
            .filter(|&v| !dup[v])
            .map(|v| {
                let vx = &self.vertices[v];
                SwcRecord {
                    id: vx.id,
                    structure_code: vx.structure_code,
                    x: vx.position.x,
                    y: vx.position.y,
                    z: vx.position.z,
                    radius: vx.radius,
                    parent_id: self.parent[v]
                        .map(|p| self.vertices[survivor(p)].id)
                        .unwrap_or(-1),
                }
            })
            .collect();
        let tree = Self::assemble(&records).expect("collapsing keeps a valid tree");
        log::warn!("collapsed {dropped} duplicate consecutive samples");
        (tree, dropped)
    }

    /// Back to SWC records, in vertex order.
    pub fn to_records(&self) -> Vec<SwcRecord> {
        (0..self.len())
            .map(|v| {
                let vx = &self.vertices[v];
                SwcRecord {
                    id: vx.id,
                    structure_code: vx.structure_code,
                    x: vx.position.x,
                    y: vx.position.y,
                    z: vx.position.z,
                    radius: vx.radius,
                    parent_id: self.parent[v].map(|p| self.vertices[p].id).unwrap_or(-1),
                }
            })
            .collect()
    }

    /// Serializes to SWC text. Coordinates use the shortest representation that
    /// parses back to the same `f64`.
    pub fn to_swc_string(&self) -> String {
        let mut out = String::new();
        for r in self.to_records() {
            writeln!(
                out,
                "{} {} {:?} {:?} {:?} {:?} {}",
                r.id, r.structure_code, r.x, r.y, r.z, r.radius, r.parent_id
            )
            .unwrap();
        }
        out
    }
}

fn id_index(records: &[SwcRecord]) -> Result<HashMap<i64, usize>> {
    let index: HashMap<i64, usize> = records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    if index.len() != records.len() {
        return Err(Error::Structure("duplicate sample ids".into()));
    }
    for r in records {
        if r.parent_id != -1 && !index.contains_key(&r.parent_id) {
            return Err(Error::Structure(format!(
                "sample id {} refers to missing parent {}",
                r.id, r.parent_id
            )));
        }
    }
    Ok(index)
}
