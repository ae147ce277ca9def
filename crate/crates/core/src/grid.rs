use crate::dct::QuantBlock;

/// Quantized DCT coefficients of one component, one zig-zag block per entry.
///
/// DC values are absolute, never the per-block differences stored in the
/// entropy-coded stream.
#[derive(Clone, PartialEq, Eq)]
pub struct CoeffGrid {
    width_blocks: usize,
    height_blocks: usize,
    blocks: Vec<QuantBlock>,
}

impl std::fmt::Debug for CoeffGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoeffGrid")
            .field("width_blocks", &self.width_blocks)
            .field("height_blocks", &self.height_blocks)
            .finish_non_exhaustive()
    }
}

impl CoeffGrid {
    /// Panics when `blocks.len() != width_blocks * height_blocks`.
    pub fn new(width_blocks: usize, height_blocks: usize, blocks: Vec<QuantBlock>) -> Self {
        assert_eq!(blocks.len(), width_blocks * height_blocks, "block count");
        CoeffGrid {
            width_blocks,
            height_blocks,
            blocks,
        }
    }

    pub fn zeroed(width_blocks: usize, height_blocks: usize) -> Self {
        Self::new(
            width_blocks,
            height_blocks,
            vec![[0; 64]; width_blocks * height_blocks],
        )
    }

    pub fn width_blocks(&self) -> usize {
        self.width_blocks
    }

    pub fn height_blocks(&self) -> usize {
        self.height_blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[QuantBlock] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [QuantBlock] {
        &mut self.blocks
    }

    pub fn block(&self, bx: usize, by: usize) -> &QuantBlock {
        &self.blocks[by * self.width_blocks + bx]
    }

    /// Values of the coefficient at 0-based zig-zag index `zz` across all blocks.
    pub fn coefficient(&self, zz: usize) -> impl Iterator<Item = i32> + '_ {
        self.blocks.iter().map(move |b| b[zz])
    }
}
