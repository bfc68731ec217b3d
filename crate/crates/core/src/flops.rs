//! Analytic floating-point operation counts for the two attention scoring
//! variants. Counts cover one decode step over `n_slots` encoder states,
//! with no cross-step caching assumed.

/// Additive scoring v·tanh(W·s + U·h_j): the W·s projection is shared across
/// slots; each slot pays for U·h_j, the add, the tanh, and the v dot.
pub fn additive_score_flops(n_slots: u64, dec_width: u64, enc_width: u64, attn_width: u64) -> u64 {
    let shared_query = attn_width * (2 * dec_width - 1);
    let per_slot = attn_width * (2 * enc_width - 1)  // U·h_j
        + attn_width                                  // + query
        + attn_width                                  // tanh
        + (2 * attn_width - 1); // v · t
    shared_query + n_slots * per_slot
}

/// Dot-product scoring s·(W·h_j): each slot pays for W·h_j and one dot.
pub fn dot_score_flops(n_slots: u64, dec_width: u64, enc_width: u64) -> u64 {
    n_slots * (dec_width * (2 * enc_width - 1) + (2 * dec_width - 1))
}

/// One benchmark grid point: source length and hidden width. The attention
/// space of the additive variant is set to the hidden width so the two
/// variants are compared at equal dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub src_len: u64,
    pub hidden: u64,
}

impl GridPoint {
    pub fn n_slots(&self) -> u64 {
        self.src_len + 2
    }

    pub fn additive_flops(&self) -> u64 {
        additive_score_flops(self.n_slots(), self.hidden, 2 * self.hidden, self.hidden)
    }

    pub fn dot_flops(&self) -> u64 {
        dot_score_flops(self.n_slots(), self.hidden, 2 * self.hidden)
    }
}

pub fn default_grid() -> Vec<GridPoint> {
    let mut grid = Vec::new();
    for &src_len in &[4u64, 8, 16] {
        for &hidden in &[16u64, 32, 64] {
            grid.push(GridPoint { src_len, hidden });
        }
    }
    grid
}
