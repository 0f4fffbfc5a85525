use crate::tabular::{Cell, ColumnSpec, Dataset};

/// Column-major working copy of a dataset, used while an operation rewrites
/// whole columns.
#[derive(Clone)]
pub(crate) struct Frame {
    pub specs: Vec<ColumnSpec>,
    pub cols: Vec<Vec<Cell>>,
    n_rows: usize,
}

impl Frame {
    pub fn new(ds: &Dataset) -> Frame {
        let mut cols = vec![Vec::with_capacity(ds.n_rows()); ds.n_cols()];
        for row in ds.rows() {
            for (col, cell) in cols.iter_mut().zip(row) {
                col.push(cell.clone());
            }
        }
        Frame {
            specs: ds.columns().to_vec(),
            cols,
            n_rows: ds.n_rows(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn numeric(&self, idx: usize) -> Vec<Option<f64>> {
        self.cols[idx].iter().map(Cell::as_f64).collect()
    }

    pub fn remove(&mut self, idx: usize) -> (ColumnSpec, Vec<Cell>) {
        (self.specs.remove(idx), self.cols.remove(idx))
    }

    pub fn insert(&mut self, idx: usize, spec: ColumnSpec, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.n_rows);
        self.specs.insert(idx, spec);
        self.cols.insert(idx, cells);
    }

    pub fn push(&mut self, spec: ColumnSpec, cells: Vec<Cell>) {
        let at = self.specs.len();
        self.insert(at, spec, cells);
    }

    pub fn retain_rows(&mut self, keep: &[bool]) {
        for col in self.cols.iter_mut() {
            let mut it = keep.iter();
            col.retain(|_| *it.next().unwrap_or(&true));
        }
        self.n_rows = keep.iter().filter(|&&k| k).count();
    }

    /// Back to row-major form. Missing counts are recomputed by the dataset
    /// constructor.
    pub fn finish(self) -> (Vec<ColumnSpec>, Vec<Vec<Cell>>) {
        let mut rows = vec![Vec::with_capacity(self.cols.len()); self.n_rows];
        for col in self.cols {
            for (row, cell) in rows.iter_mut().zip(col) {
                row.push(cell);
            }
        }
        (self.specs, rows)
    }
}
