//! 8-bit PNG export and import of [`Image`]s.

use std::io::Cursor;

use crate::image::Image;
use crate::{Error, Result};

/// Encodes a 1- or 3-channel image with values in `[0, 1]` as an 8-bit
/// grayscale or RGB PNG. Pixels are quantized as `round(v * 255)`.
pub fn export_png(image: &Image) -> Result<Vec<u8>> {
    let color = match image.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::BadInput(format!("PNG export needs 1 or 3 channels, got {c}"))),
    };
    if let Some(bad) = image.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::ValueOutOfRange(format!("pixel value {bad} outside [0, 1]")));
    }
    let plane = image.height * image.width;
    let mut pixels = Vec::with_capacity(image.data.len());
    for i in 0..plane {
        for c in 0..image.channels {
            let v = image.data[c * plane + i] as f64;
            pixels.push((v * 255.0).round() as u8);
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width as u32, image.height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&pixels)
            .map_err(|e| Error::Png(e.to_string()))?;
        writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes a PNG into a planar image scaled to `[0, 1]`. Alpha is dropped
/// and 16-bit samples are reduced to 8 bits.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
    let (samples, channels) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(Error::Png("unexpanded palette".into())),
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let mut img = Image::zeros(channels, h, w);
    for y in 0..h {
        let row = &buf[y * info.line_size..];
        for x in 0..w {
            for c in 0..channels {
                *img.at_mut(c, y, x) = row[x * samples + c] as f32 / 255.0;
            }
        }
    }
    Ok(img)
}
