use super::{InteractionDataset, TrackIdx, UserIdx};

/// Binarized user-item matrix over a subset of a dataset's interactions.
///
/// Rows are per user, sorted by item index. The shape always covers the full
/// dataset so indices stay aligned with it.
#[derive(Debug, Clone)]
pub struct UserItemMatrix {
    n_items: usize,
    rows: Vec<Vec<u32>>,
    nnz: usize,
}

impl UserItemMatrix {
    pub fn from_indices(ds: &InteractionDataset, indices: &[usize]) -> Self {
        let interactions = ds.interactions();
        let mut rows = vec![Vec::new(); ds.num_users()];
        for &i in indices {
            let it = &interactions[i];
            rows[it.user.index()].push(it.track.0);
        }
        Self::from_rows(ds.num_tracks(), rows)
    }

    /// All interactions of the dataset.
    pub fn full(ds: &InteractionDataset) -> Self {
        let all: Vec<usize> = (0..ds.num_interactions()).collect();
        Self::from_indices(ds, &all)
    }

    pub fn from_rows(n_items: usize, mut rows: Vec<Vec<u32>>) -> Self {
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let nnz = rows.iter().map(Vec::len).sum();
        Self { n_items, rows, nnz }
    }

    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn num_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn row(&self, u: UserIdx) -> &[u32] {
        &self.rows[u.index()]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn contains(&self, u: UserIdx, t: TrackIdx) -> bool {
        self.rows[u.index()].binary_search(&t.0).is_ok()
    }

    /// Per-item user lists (the transpose), sorted by user index.
    pub fn item_users(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.n_items];
        for (u, row) in self.rows.iter().enumerate() {
            for &i in row {
                cols[i as usize].push(u as u32);
            }
        }
        cols
    }

    pub fn item_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_items];
        for row in &self.rows {
            for &i in row {
                counts[i as usize] += 1;
            }
        }
        counts
    }
}
