//! Incidence-matrix estimability heuristic: boolean occurrence of unmeasured
//! states over the known right-hand sides, with full-column rank decided by
//! maximum bipartite matching.
//!
//! Occurrences count only appearances on a right-hand side; a state's own
//! time derivative is never an occurrence. The rendered table marks a cross
//! with `x` and the witness assignment with `(x)`.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructuralError {
    #[error("unknown state label '{0}' in occurrence set")]
    UnknownLabel(String),
    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),
    #[error("matrix must be nonempty")]
    Empty,
}

/// Boolean occurrence matrix of unmeasured states (columns) over known
/// equations (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// entries[r][c] is true when column state occurs in row equation.
    pub entries: Vec<Vec<bool>>,
}

/// Outcome of the matching: a witness assignment column -> row when the
/// matrix has full column rank, otherwise the columns left unmatched.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub full_column_rank: bool,
    /// column index -> row index, for matched columns.
    pub assignment: BTreeMap<usize, usize>,
    pub unmatched_columns: Vec<usize>,
}

/// Builds the matrix from per-equation occurrence label sets.
pub fn build_incidence(
    equations: &[(String, Vec<String>)],
    unmeasured: &[String],
) -> Result<IncidenceMatrix, StructuralError> {
    let mut seen = std::collections::BTreeSet::new();
    for label in unmeasured {
        if !seen.insert(label.clone()) {
            return Err(StructuralError::DuplicateLabel(label.clone()));
        }
    }
    let col_index: BTreeMap<&str, usize> = unmeasured
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut entries = vec![vec![false; unmeasured.len()]; equations.len()];
    for (r, (_, occ)) in equations.iter().enumerate() {
        for label in occ {
            match col_index.get(label.as_str()) {
                Some(&c) => entries[r][c] = true,
                None => return Err(StructuralError::UnknownLabel(label.clone())),
            }
        }
    }
    Ok(IncidenceMatrix {
        rows: equations.iter().map(|(name, _)| name.clone()).collect(),
        cols: unmeasured.to_vec(),
        entries,
    })
}

/// Kuhn augmenting-path search for one column. `matched_row[r]` holds the
/// column currently assigned to row r.
fn try_assign(
    entries: &[Vec<bool>],
    col: usize,
    visited: &mut [bool],
    matched_row: &mut [Option<usize>],
    col_to_row: &mut [Option<usize>],
) -> bool {
    for r in 0..entries.len() {
        if entries[r][col] && !visited[r] {
            visited[r] = true;
            if matched_row[r].is_none()
                || try_assign(
                    entries,
                    matched_row[r].unwrap(),
                    visited,
                    matched_row,
                    col_to_row,
                )
            {
                matched_row[r] = Some(col);
                col_to_row[col] = Some(r);
                return true;
            }
        }
    }
    false
}

fn max_matching_size(entries: &[Vec<bool>], n_cols: usize) -> (usize, Vec<Option<usize>>) {
    let mut matched_row = vec![None; entries.len()];
    let mut col_to_row = vec![None; n_cols];
    let mut size = 0;
    for c in 0..n_cols {
        let mut visited = vec![false; entries.len()];
        if try_assign(entries, c, &mut visited, &mut matched_row, &mut col_to_row) {
            size += 1;
        }
    }
    (size, col_to_row)
}

/// Decides full column rank via maximum matching. Among maximum matchings the
/// witness is the lexicographically smallest one (columns in order, each
/// taking the lowest feasible row), which is deterministic.
pub fn full_column_rank(matrix: &IncidenceMatrix) -> Result<MatchingResult, StructuralError> {
    if matrix.rows.is_empty() || matrix.cols.is_empty() {
        return Err(StructuralError::Empty);
    }
    let n_rows = matrix.rows.len();
    let n_cols = matrix.cols.len();
    let (max_size, _) = max_matching_size(&matrix.entries, n_cols);

    // Lexicographic witness: fix columns one by one to their lowest row that
    // still admits a matching of maximal size on the remainder. Each step
    // preserves reachability of max_size, so the prefix always extends.
    let mut fixed: Vec<Option<usize>> = vec![None; n_cols];
    let mut used_rows = vec![false; n_rows];
    for c in 0..n_cols {
        for r in 0..n_rows {
            if !matrix.entries[r][c] || used_rows[r] {
                continue;
            }
            // Remaining columns (> c) over remaining rows (unused, != r).
            let reduced: Vec<Vec<bool>> = matrix
                .entries
                .iter()
                .enumerate()
                .map(|(ri, row)| {
                    if used_rows[ri] || ri == r {
                        vec![false; n_cols]
                    } else {
                        row.iter()
                            .enumerate()
                            .map(|(ci, &on)| on && ci > c)
                            .collect()
                    }
                })
                .collect();
            let (rest, _) = max_matching_size(&reduced, n_cols);
            let matched_with_this = fixed.iter().flatten().count() + 1;
            if matched_with_this + rest == max_size {
                fixed[c] = Some(r);
                used_rows[r] = true;
                break;
            }
        }
    }

    let assignment: BTreeMap<usize, usize> = fixed
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.map(|r| (c, r)))
        .collect();
    let unmatched: Vec<usize> = (0..n_cols).filter(|c| !assignment.contains_key(c)).collect();
    Ok(MatchingResult {
        full_column_rank: assignment.len() == n_cols,
        assignment,
        unmatched_columns: unmatched,
    })
}

/// Text table in the paper's convention: `x` marks an occurrence, `(x)` the
/// witness assignment. Byte-stable for golden tests.
pub fn render(matrix: &IncidenceMatrix, result: &MatchingResult) -> String {
    let header_left = "[f,g] | [x^u,y^u] ->";
    let left_width = matrix
        .rows
        .iter()
        .map(|r| r.len())
        .chain(std::iter::once(header_left.len()))
        .max()
        .unwrap_or(0);
    let col_widths: Vec<usize> = matrix.cols.iter().map(|c| c.len().max(3)).collect();
    let mut out = String::new();
    let mut line = format!("{header_left:<left_width$}");
    for (c, name) in matrix.cols.iter().enumerate() {
        line.push_str(&format!(" | {name:^width$}", width = col_widths[c]));
    }
    out.push_str(line.trim_end());
    out.push('\n');
    let mut rule = String::new();
    rule.push_str(&"-".repeat(left_width));
    for w in &col_widths {
        rule.push_str(&format!("-+-{}", "-".repeat(*w)));
    }
    out.push_str(&rule);
    out.push('\n');
    for (r, name) in matrix.rows.iter().enumerate() {
        let mut line = format!("{name:<left_width$}");
        for c in 0..matrix.cols.len() {
            let mark = if matrix.entries[r][c] {
                if result.assignment.get(&c) == Some(&r) {
                    "(x)"
                } else {
                    "x"
                }
            } else {
                ""
            };
            line.push_str(&format!(" | {mark:^width$}", width = col_widths[c]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str(if result.full_column_rank {
        "full column rank: yes\n"
    } else {
        "full column rank: no\n"
    });
    out
}
