//! Heatmaps of a back-projection on the neuron grid, written as binary PPM.

use std::io::Write;

use crate::error::{Error, Result};
use crate::eval::BackProjection;
use crate::label::BodyPartLabel;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [255, 255, 255];

/// One colour per label, indexed like [`BodyPartLabel::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette(pub [Rgb; BodyPartLabel::COUNT]);

impl Default for Palette {
    fn default() -> Self {
        Palette([
            [31, 119, 180],
            [255, 127, 14],
            [44, 160, 44],
            [214, 39, 40],
            [148, 103, 189],
            [140, 86, 75],
            [227, 119, 194],
            [127, 127, 127],
            [188, 189, 34],
        ])
    }
}

impl Palette {
    pub fn color(&self, label: BodyPartLabel) -> Rgb {
        self.0[label.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Paints neuron `i` at grid column `i % grid.0`, row `i / grid.0`, as an
/// `scale`-pixel square. The cell takes its dominant label's colour, faded
/// toward the background by `n / max n`; silent neurons stay background.
/// The image is `grid.0 * scale` wide and `grid.1 * scale` high.
pub fn render_heatmap(
    bp: &BackProjection,
    grid: (usize, usize),
    scale: usize,
    palette: &Palette,
) -> Result<Image> {
    if scale == 0 {
        return Err(Error::arg("scale must be at least 1"));
    }
    if grid.0 * grid.1 != bp.neurons() {
        return Err(Error::arg(format!(
            "grid {}x{} does not hold {} neurons",
            grid.0,
            grid.1,
            bp.neurons()
        )));
    }
    let (width, height) = (grid.0 * scale, grid.1 * scale);
    let mut pixels = vec![BACKGROUND; width * height];
    let max = bp.max_entry();
    for i in 0..bp.neurons() {
        let Some(label) = bp.dominant(i) else { continue };
        let t = bp.n[i][label.index()] / max;
        let c = palette.color(label);
        let cell: Rgb = std::array::from_fn(|k| {
            let bg = f64::from(BACKGROUND[k]);
            (bg + t * (f64::from(c[k]) - bg)).round() as u8
        });
        let (cx, cy) = (i % grid.0, i / grid.0);
        for y in cy * scale..(cy + 1) * scale {
            pixels[y * width + cx * scale..y * width + (cx + 1) * scale].fill(cell);
        }
    }
    Ok(Image {
        width,
        height,
        pixels,
    })
}
