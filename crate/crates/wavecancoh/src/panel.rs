//! Multichannel time-series container.

use crate::error::{Error, Result};

/// A T×D record of D channels over T samples, with a group split separating
/// the first `split` channels (group X) from the remainder (group Y).
/// Stored row-major: one sample of all channels per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    data: Vec<f64>,
    len: usize,
    channels: usize,
    split: usize,
}

impl TimeSeriesPanel {
    pub fn zeros(len: usize, channels: usize, split: usize) -> Self {
        assert!(split <= channels, "split exceeds channel count");
        TimeSeriesPanel {
            data: vec![0.0; len * channels],
            len,
            channels,
            split,
        }
    }

    pub fn from_data(data: Vec<f64>, len: usize, channels: usize, split: usize) -> Self {
        assert_eq!(data.len(), len * channels);
        assert!(split <= channels);
        TimeSeriesPanel {
            data,
            len,
            channels,
            split,
        }
    }

    /// Fuse an X panel and a Y panel of equal length into one joint panel
    /// with the split recorded at X's width.
    pub fn fuse(x: &TimeSeriesPanel, y: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
        if x.len != y.len {
            return Err(Error::InvalidData(format!(
                "group lengths differ: {} vs {}",
                x.len, y.len
            )));
        }
        let channels = x.channels + y.channels;
        let mut data = Vec::with_capacity(x.len * channels);
        for t in 0..x.len {
            data.extend_from_slice(x.sample(t));
            data.extend_from_slice(y.sample(t));
        }
        Ok(TimeSeriesPanel::from_data(data, x.len, channels, x.channels))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn set_split(&mut self, split: usize) {
        assert!(split <= self.channels);
        self.split = split;
    }

    /// All channels at sample index `t`.
    #[inline]
    pub fn sample(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    #[inline]
    pub fn sample_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.channels..(t + 1) * self.channels]
    }

    #[inline]
    pub fn get(&self, t: usize, ch: usize) -> f64 {
        self.data[t * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, t: usize, ch: usize, v: f64) {
        self.data[t * self.channels + ch] = v;
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, ch)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// The X block (first `split` channels) as its own panel.
    pub fn group_x(&self) -> TimeSeriesPanel {
        self.select(0, self.split)
    }

    /// The Y block (remaining channels) as its own panel.
    pub fn group_y(&self) -> TimeSeriesPanel {
        self.select(self.split, self.channels - self.split)
    }

    fn select(&self, start: usize, count: usize) -> TimeSeriesPanel {
        let mut out = TimeSeriesPanel::zeros(self.len, count, count);
        for t in 0..self.len {
            out.sample_mut(t)
                .copy_from_slice(&self.sample(t)[start..start + count]);
        }
        out
    }
}
