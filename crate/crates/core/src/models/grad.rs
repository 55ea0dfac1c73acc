use super::{ModelParams, Table};

/// Gradient buffer for one parameter table, tracking which rows were written.
#[derive(Debug, Clone)]
pub struct GradTable {
    pub table: Table,
    touched: Vec<bool>,
    touched_rows: Vec<usize>,
}

impl GradTable {
    fn new(rows: usize, cols: usize) -> Self {
        GradTable {
            table: Table::zeros(rows, cols),
            touched: vec![false; rows],
            touched_rows: Vec::new(),
        }
    }

    /// Mutable access to row `i`, marking it touched.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        if !self.touched[i] {
            self.touched[i] = true;
            self.touched_rows.push(i);
        }
        self.table.row_mut(i)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.table.row(i)
    }

    /// Rows written since the last clear, in first-touch order.
    pub fn touched_rows(&self) -> &[usize] {
        &self.touched_rows
    }

    pub fn is_touched(&self, i: usize) -> bool {
        self.touched[i]
    }

    pub fn clear(&mut self) {
        for &i in &self.touched_rows {
            self.table.row_mut(i).fill(0.0);
            self.touched[i] = false;
        }
        self.touched_rows.clear();
    }
}

/// Sparse-by-row gradients shaped like a [`ModelParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub entities: Vec<GradTable>,
    pub relations: GradTable,
}

impl Gradients {
    pub fn new(params: &ModelParams) -> Self {
        Gradients {
            entities: params
                .entities
                .iter()
                .map(|t| GradTable::new(t.rows, t.cols))
                .collect(),
            relations: GradTable::new(params.relations.rows, params.relations.cols),
        }
    }

    pub fn tables(&self) -> impl Iterator<Item = &GradTable> {
        self.entities.iter().chain(std::iter::once(&self.relations))
    }

    pub fn tables_mut(&mut self) -> impl Iterator<Item = &mut GradTable> {
        self.entities
            .iter_mut()
            .chain(std::iter::once(&mut self.relations))
    }

    pub fn clear(&mut self) {
        self.tables_mut().for_each(GradTable::clear);
    }

    /// Largest absolute difference over all coordinates.
    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        self.tables()
            .zip(other.tables())
            .flat_map(|(a, b)| a.table.data.iter().zip(&b.table.data))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}
