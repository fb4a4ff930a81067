//! LDPC codes and the PMF/LLR interfaces between detection and decoding:
//! alist-backed parity-check matrices, GF(2) encoding by back-substitution
//! on the reduced matrix, flooding sum-product decoding, bit/symbol
//! (de)mapping, and LLR conversions.

mod alist;
mod decode;
mod llr;
mod peg;

pub use decode::{ldpc_decode, DecodeOutput};
pub use llr::{
    bit_llr_from_loglik, llr_to_symbol_pmf, pmf_to_llr, LlrFrame, LlrMode, LLR_CLAMP,
};
pub use peg::peg_generate;

use crate::error::{Error, Result};
use crate::model::{ComplexGrid, Constellation, PilotGrid};

/// Embedded (7,4) Hamming code fixture: the redundant 7x7 circulant
/// parity-check matrix (all nonzero dual codewords), which decodes far
/// better under belief propagation than the minimal 3x7 form.
pub const HAMMING_7_4_ALIST: &str = include_str!("../../fixtures/hamming_7_4.alist");

/// Embedded (3,6)-regular length-1008 code, grown by PEG with a fixed seed.
pub const PEG_1008_504_ALIST: &str = include_str!("../../fixtures/peg_n1008_m504.alist");

type BitRow = Vec<u64>;

fn bit_get(row: &BitRow, col: usize) -> bool {
    row[col / 64] >> (col % 64) & 1 == 1
}

fn bit_set(row: &mut BitRow, col: usize) {
    row[col / 64] |= 1 << (col % 64);
}

fn xor_into(dst: &mut BitRow, src: &BitRow) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// A binary linear code given by its sparse parity-check matrix, with the
/// dense reduced form retained for encoding.
#[derive(Debug, Clone)]
pub struct CodeDefinition {
    n: usize,
    row_adj: Vec<Vec<u32>>,
    col_adj: Vec<Vec<u32>>,
    rank: usize,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Reduced rows, one per parity position, over the full column space.
    encoder_rows: Vec<BitRow>,
    /// Flat edge layout for the decoder: edges grouped by check.
    edge_vars: Vec<u32>,
    edge_offsets: Vec<u32>,
    /// Edge indices grouped by variable.
    var_edges: Vec<u32>,
    var_edge_offsets: Vec<u32>,
}

impl CodeDefinition {
    /// Builds a code from check-to-variable adjacency over `n` columns.
    pub fn from_adjacency(row_adj: Vec<Vec<u32>>, n: usize) -> Result<Self> {
        for (c, row) in row_adj.iter().enumerate() {
            for &v in row {
                if v as usize >= n {
                    return Err(Error::AlistParse(format!(
                        "check {c} references variable {v} beyond n={n}"
                    )));
                }
            }
        }
        let m = row_adj.len();
        let mut col_adj = vec![Vec::new(); n];
        for (c, row) in row_adj.iter().enumerate() {
            for &v in row {
                col_adj[v as usize].push(c as u32);
            }
        }

        // Gauss-Jordan over GF(2) on dense bit rows.
        let words = n.div_ceil(64);
        let mut rows: Vec<BitRow> = row_adj
            .iter()
            .map(|r| {
                let mut bits = vec![0u64; words];
                for &v in r {
                    bit_set(&mut bits, v as usize);
                }
                bits
            })
            .collect();
        let mut pivot_cols = Vec::new();
        let mut next_row = 0usize;
        for col in 0..n {
            if next_row == m {
                break;
            }
            let Some(found) = (next_row..m).find(|&rr| bit_get(&rows[rr], col)) else {
                continue;
            };
            rows.swap(next_row, found);
            let pivot = rows[next_row].clone();
            for (rr, row) in rows.iter_mut().enumerate() {
                if rr != next_row && bit_get(row, col) {
                    xor_into(row, &pivot);
                }
            }
            pivot_cols.push(col);
            next_row += 1;
        }
        let rank = next_row;
        let parity_positions = pivot_cols;
        let in_parity: Vec<bool> = {
            let mut v = vec![false; n];
            for &p in &parity_positions {
                v[p] = true;
            }
            v
        };
        let info_positions: Vec<usize> = (0..n).filter(|&c| !in_parity[c]).collect();
        let encoder_rows: Vec<BitRow> = rows[..rank].to_vec();

        // CSR edge layout.
        let mut edge_vars = Vec::new();
        let mut edge_offsets = Vec::with_capacity(m + 1);
        edge_offsets.push(0u32);
        for row in &row_adj {
            edge_vars.extend_from_slice(row);
            edge_offsets.push(edge_vars.len() as u32);
        }
        let mut var_edge_offsets = vec![0u32; n + 1];
        for &v in &edge_vars {
            var_edge_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            var_edge_offsets[i + 1] += var_edge_offsets[i];
        }
        let mut cursor = var_edge_offsets.clone();
        let mut var_edges = vec![0u32; edge_vars.len()];
        for (e, &v) in edge_vars.iter().enumerate() {
            var_edges[cursor[v as usize] as usize] = e as u32;
            cursor[v as usize] += 1;
        }

        Ok(Self {
            n,
            row_adj,
            col_adj,
            rank,
            info_positions,
            parity_positions,
            encoder_rows,
            edge_vars,
            edge_offsets,
            var_edges,
            var_edge_offsets,
        })
    }

    /// Parses the alist text format.
    pub fn from_alist_str(text: &str) -> Result<Self> {
        let (row_adj, n) = alist::parse(text)?;
        Self::from_adjacency(row_adj, n)
    }

    pub fn from_alist_file(path: &std::path::Path) -> Result<Self> {
        Self::from_alist_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to alist text.
    pub fn to_alist_string(&self) -> String {
        alist::write(&self.row_adj, &self.col_adj, self.n)
    }

    /// The (7,4) Hamming code.
    pub fn hamming_7_4() -> Self {
        Self::from_alist_str(HAMMING_7_4_ALIST).expect("embedded fixture parses")
    }

    /// The (3,6)-regular n=1008 PEG code.
    pub fn peg_1008() -> Self {
        Self::from_alist_str(PEG_1008_504_ALIST).expect("embedded fixture parses")
    }

    /// Identity "code" with no checks: every bit is an information bit.
    pub fn rate_one(n: usize) -> Self {
        Self::from_adjacency(vec![], n).expect("no checks cannot fail")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.row_adj.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Information bits per codeword, `n - rank`.
    pub fn k_info(&self) -> usize {
        self.n - self.rank
    }

    pub fn rate(&self) -> f64 {
        self.k_info() as f64 / self.n as f64
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn row_adj(&self) -> &[Vec<u32>] {
        &self.row_adj
    }

    pub fn col_adj(&self) -> &[Vec<u32>] {
        &self.col_adj
    }

    pub(crate) fn edges(&self) -> (&[u32], &[u32], &[u32], &[u32]) {
        (
            &self.edge_vars,
            &self.edge_offsets,
            &self.var_edges,
            &self.var_edge_offsets,
        )
    }

    /// Systematically encodes `k_info` information bits into a codeword:
    /// information bits land on the non-pivot columns in ascending order
    /// and each parity bit is back-substituted from its reduced row.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k_info() {
            return Err(Error::LengthMismatch {
                expected: self.k_info(),
                got: info.len(),
            });
        }
        let mut codeword = vec![0u8; self.n];
        for (&pos, &bit) in self.info_positions.iter().zip(info) {
            codeword[pos] = bit & 1;
        }
        for (t, row) in self.encoder_rows.iter().enumerate() {
            let pivot = self.parity_positions[t];
            let mut parity = 0u8;
            for (w, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let col = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if col != pivot {
                        parity ^= codeword[col];
                    }
                }
            }
            codeword[pivot] = parity;
        }
        Ok(codeword)
    }

    /// Whether `H c = 0`.
    pub fn syndrome_ok(&self, codeword: &[u8]) -> bool {
        self.row_adj.iter().all(|row| {
            row.iter().fold(0u8, |acc, &v| acc ^ codeword[v as usize]) == 0
        })
    }

    /// Extracts the information bits from a codeword.
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }
}

/// Maps per-channel codewords onto the data slots of a frame, Gray-mapped
/// in time order, with pilot slots taken from the pilot grid.
pub fn map_frame(
    codewords: &[Vec<u8>],
    constellation: &Constellation,
    pilots: &PilotGrid,
) -> Result<ComplexGrid> {
    let (d, n) = (pilots.channels(), pilots.len());
    if codewords.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: codewords.len(),
        });
    }
    let rm = constellation.bits_per_symbol();
    let mut grid = ComplexGrid::zeros(d, n);
    for (i, cw) in codewords.iter().enumerate() {
        let data_slots = pilots.data_slots(i);
        if cw.len() != data_slots.len() * rm {
            return Err(Error::LengthMismatch {
                expected: data_slots.len() * rm,
                got: cw.len(),
            });
        }
        for (t, &k) in data_slots.iter().enumerate() {
            let mut label = 0u32;
            for j in 0..rm {
                label = (label << 1) | cw[t * rm + j] as u32;
            }
            grid[(i, k)] = constellation.point(constellation.index_of_label(label));
        }
        for k in 0..n {
            if pilots.is_pilot(i, k) {
                grid[(i, k)] = pilots.value(i, k);
            }
        }
    }
    Ok(grid)
}

/// Hard nearest-point demapping of the data slots back to bits.
pub fn demap_hard(
    grid: &ComplexGrid,
    constellation: &Constellation,
    pilots: &PilotGrid,
) -> Vec<Vec<u8>> {
    let rm = constellation.bits_per_symbol();
    (0..grid.channels())
        .map(|i| {
            let mut bits = Vec::new();
            for k in pilots.data_slots(i) {
                let idx = constellation.nearest(grid[(i, k)]);
                for j in 0..rm {
                    bits.push(constellation.bit(idx, j));
                }
            }
            bits
        })
        .collect()
}
