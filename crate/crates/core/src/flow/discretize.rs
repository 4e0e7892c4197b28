use super::FlowField;
use crate::error::{Error, Result};

/// Largest representable displacement per component.
pub const FLOW_CLASS_CUTOFF: i32 = 5;
const SIDE: u32 = (2 * FLOW_CLASS_CUTOFF + 1) as u32;
/// `(2 * 5 + 1)^2`
pub const FLOW_CLASS_COUNT: u32 = SIDE * SIDE;

/// Per-pixel flow classes. Class ids are u-major:
/// `id = (u + 5) * 11 + (v + 5)` with `u` the horizontal and `v` the
/// vertical integer displacement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowClassGrid {
    height: usize,
    width: usize,
    class_ids: Vec<u8>,
}

impl FlowClassGrid {
    pub fn new(height: usize, width: usize, class_ids: Vec<u8>) -> Result<Self> {
        if class_ids.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "expected {} class ids, got {}",
                height * width,
                class_ids.len()
            )));
        }
        if let Some(&bad) = class_ids.iter().find(|&&id| u32::from(id) >= FLOW_CLASS_COUNT) {
            return Err(Error::InvalidClass(bad.into()));
        }
        Ok(Self {
            height,
            width,
            class_ids,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn class_ids(&self) -> &[u8] {
        &self.class_ids
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.class_ids[row * self.width + col]
    }
}

/// Class id of an integer displacement; components outside the cutoff are
/// clamped.
pub fn encode_class(u: i32, v: i32) -> u8 {
    let u = u.clamp(-FLOW_CLASS_CUTOFF, FLOW_CLASS_CUTOFF);
    let v = v.clamp(-FLOW_CLASS_CUTOFF, FLOW_CLASS_CUTOFF);
    ((u + FLOW_CLASS_CUTOFF) as u32 * SIDE + (v + FLOW_CLASS_CUTOFF) as u32) as u8
}

pub fn decode_class(id: u32) -> Result<(i32, i32)> {
    if id >= FLOW_CLASS_COUNT {
        return Err(Error::InvalidClass(id));
    }
    Ok((
        (id / SIDE) as i32 - FLOW_CLASS_CUTOFF,
        (id % SIDE) as i32 - FLOW_CLASS_CUTOFF,
    ))
}

#[inline]
fn quantize(x: f64) -> i32 {
    // f64::round rounds half away from zero
    x.round()
        .clamp(-FLOW_CLASS_CUTOFF as f64, FLOW_CLASS_CUTOFF as f64) as i32
}

/// Rounds each component to the nearest integer (ties away from zero),
/// clamps to `[-5, 5]` and encodes the pair as one of 121 classes.
pub fn discretize_flow(flow: &FlowField) -> FlowClassGrid {
    let class_ids = flow
        .vectors()
        .map(|(u, v)| encode_class(quantize(u), quantize(v)))
        .collect();
    FlowClassGrid {
        height: flow.height(),
        width: flow.width(),
        class_ids,
    }
}

/// Decodes every class back to its integer displacement.
pub fn undiscretize(grid: &FlowClassGrid) -> FlowField {
    let mut i = 0;
    FlowField::from_fn(grid.height, grid.width, |_, _| {
        // ids are validated at construction
        let (u, v) = decode_class(grid.class_ids[i].into()).expect("validated class id");
        i += 1;
        (u as f64, v as f64)
    })
}
