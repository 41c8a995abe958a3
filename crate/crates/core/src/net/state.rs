/// History of one dilated depthwise convolution: the last
/// `dilation·(kernel − 1)` input frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RingBuffer {
    context: usize,
    width: usize,
    data: Vec<f32>,
    next: usize,
}

impl RingBuffer {
    pub fn new(context: usize, width: usize) -> Self {
        Self {
            context,
            width,
            data: vec![0.0; context * width],
            next: 0,
        }
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// The frame `lag` steps back (`1 ≤ lag ≤ context`).
    #[inline]
    pub fn lagged(&self, lag: usize) -> &[f32] {
        debug_assert!(lag >= 1 && lag <= self.context);
        let slot = (self.next + self.context - lag) % self.context;
        &self.data[slot * self.width..(slot + 1) * self.width]
    }

    #[inline]
    pub fn push(&mut self, frame: &[f32]) {
        if self.context == 0 {
            return;
        }
        let slot = self.next;
        self.data[slot * self.width..(slot + 1) * self.width].copy_from_slice(frame);
        self.next = (self.next + 1) % self.context;
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
        self.next = 0;
    }
}

/// Per-stream recurrent state of one network: one ring buffer per conv block,
/// LSTM hidden and cell vectors per layer, and the number of frames consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState {
    pub(crate) rings: Vec<RingBuffer>,
    pub(crate) lstm_h: Vec<Vec<f32>>,
    pub(crate) lstm_c: Vec<Vec<f32>>,
    frames: u64,
}

impl StreamState {
    pub(crate) fn new(rings: Vec<RingBuffer>, lstm_widths: &[usize]) -> Self {
        Self {
            rings,
            lstm_h: lstm_widths.iter().map(|w| vec![0.0; *w]).collect(),
            lstm_c: lstm_widths.iter().map(|w| vec![0.0; *w]).collect(),
            frames: 0,
        }
    }

    /// A state for a single conv block.
    pub fn for_block(context: usize, width: usize) -> Self {
        Self::new(vec![RingBuffer::new(context, width)], &[])
    }

    pub fn rings(&self) -> &[RingBuffer] {
        &self.rings
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub(crate) fn advance(&mut self, frames: usize) {
        self.frames += frames as u64;
    }

    pub fn reset(&mut self) {
        self.rings.iter_mut().for_each(RingBuffer::reset);
        self.lstm_h.iter_mut().for_each(|v| v.fill(0.0));
        self.lstm_c.iter_mut().for_each(|v| v.fill(0.0));
        self.frames = 0;
    }

    pub fn is_zeroed(&self) -> bool {
        self.frames == 0
            && self.rings.iter().all(|r| r.data.iter().all(|v| *v == 0.0))
            && self.lstm_h.iter().chain(&self.lstm_c).all(|v| v.iter().all(|x| *x == 0.0))
    }
}
