use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};

use super::classification::AccuracyRow;
use super::EvalError;
use crate::registry::FunctionalityId;
use crate::scalar::Scalar;

const BAR: u32 = 16;
const GAP: u32 = 6;
const MARGIN: u32 = 12;
const HEIGHT: u32 = 200;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const GUIDE: Rgb<u8> = Rgb([190, 190, 190]);
const HATEFUL: Rgb<u8> = Rgb([200, 70, 60]);
const NON_HATEFUL: Rgb<u8> = Rgb([60, 110, 190]);

/// Bar chart of functionality accuracies, one slot per functionality in id
/// order, coloured by gold label, with guides at 0.5 and 1.0.
pub fn accuracy_chart<F: Scalar>(rows: &[AccuracyRow<F>]) -> RgbImage {
    let slots = FunctionalityId::all().count() as u32;
    let width = 2 * MARGIN + slots * (BAR + GAP) - GAP;
    let height = HEIGHT + 2 * MARGIN;
    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    let base = MARGIN + HEIGHT;
    for frac in [0.5, 1.0] {
        let y = base - (HEIGHT as f64 * frac) as u32;
        for x in MARGIN..width - MARGIN {
            img.put_pixel(x, y, GUIDE);
        }
    }
    for row in rows.iter().filter(|r| r.group.is_none()) {
        let Some(acc) = row.accuracy else { continue };
        let slot = u32::from(row.functionality.number()) - 1;
        let x0 = MARGIN + slot * (BAR + GAP);
        let h = (acc.to_real().clamp(0.0, 1.0) * HEIGHT as f64).round() as u32;
        let colour = if row.gold_label.is_hateful() { HATEFUL } else { NON_HATEFUL };
        for x in x0..x0 + BAR {
            for y in base - h..base {
                img.put_pixel(x, y, colour);
            }
        }
    }
    for x in MARGIN..width - MARGIN {
        img.put_pixel(x, base, AXIS);
    }
    img
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<(), EvalError> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| EvalError::Image(format!("{}: {e}", path.display())))
}
