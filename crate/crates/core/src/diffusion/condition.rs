use super::DiffusionError;
use crate::grid::Grid;
use crate::partial::PartialDepthPair;

/// Sketch mask `x`, partial disparity `p` and validity mask `m`, spatially
/// aligned with the target.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTensor {
    pub sketch: Grid<bool>,
    pub partial: Grid<f64>,
    pub valid: Grid<bool>,
}

impl ConditionTensor {
    pub fn new(sketch: Grid<bool>, partial: Grid<f64>, valid: Grid<bool>) -> Result<Self, DiffusionError> {
        let c = Self {
            sketch,
            partial,
            valid,
        };
        c.validate()?;
        Ok(c)
    }

    /// Pure sketch conditioning: no partial depth.
    pub fn sketch_only(sketch: Grid<bool>) -> Self {
        let (w, h) = (sketch.width(), sketch.height());
        Self {
            sketch,
            partial: Grid::new(w, h, 0.0),
            valid: Grid::new(w, h, false),
        }
    }

    pub fn from_partial(sketch: Grid<bool>, pair: &PartialDepthPair) -> Result<Self, DiffusionError> {
        Self::new(sketch, pair.partial.values.clone(), pair.mask.clone())
    }

    pub fn width(&self) -> usize {
        self.sketch.width()
    }

    pub fn height(&self) -> usize {
        self.sketch.height()
    }

    pub fn pixels(&self) -> usize {
        self.sketch.len()
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if !self.sketch.same_shape(&self.partial) || !self.sketch.same_shape(&self.valid) {
            return Err(DiffusionError::Shape("condition channels differ in size".into()));
        }
        for ((p, m), x) in self
            .partial
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .zip(self.sketch.as_slice())
        {
            if *m {
                if !(0.0..=1.0).contains(p) {
                    return Err(DiffusionError::Condition(format!("partial value {p} outside [0, 1]")));
                }
                if !*x {
                    return Err(DiffusionError::Condition("partial depth outside the sketch".into()));
                }
            } else if *p != 0.0 {
                return Err(DiffusionError::Condition("partial value set where mask is 0".into()));
            }
        }
        Ok(())
    }

    /// Network input channels after the noisy target: `x`, `p` mapped to
    /// the target's `[-1, 1]` range (0 where unknown), and `m`.
    pub fn channels(&self) -> impl Iterator<Item = f64> + '_ {
        let x = self.sketch.as_slice().iter().map(|&b| f64::from(u8::from(b)));
        let p = self
            .partial
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .map(|(&p, &m)| if m { 2.0 * p - 1.0 } else { 0.0 });
        let m = self.valid.as_slice().iter().map(|&b| f64::from(u8::from(b)));
        x.chain(p).chain(m)
    }
}
