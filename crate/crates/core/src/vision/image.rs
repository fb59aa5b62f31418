use std::io::Cursor;

use super::VisionError;

/// Row-major 8-bit RGB image.
///
/// Pixel `(x, y)` covers the unit square `[x, x+1) × [y, y+1)`, so its center
/// sits at `(x + 0.5, y + 0.5)` in continuous image coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::EmptyImage);
        }
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&fill);
        }
        Ok(Image { width, height, data })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::EmptyImage);
        }
        if data.len() != width * height * 3 {
            return Err(VisionError::Decode(format!(
                "{}x{} RGB image needs {} samples, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, px: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&px);
    }

    /// Fills the pixel rectangle `[x0, x1) × [y0, y1)`, clipped to the image.
    pub fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, px: [u8; 3]) {
        for y in y0.min(self.height)..y1.min(self.height) {
            for x in x0.min(self.width)..x1.min(self.width) {
                self.put(x, y, px);
            }
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Bilinear sample at continuous coordinates; `None` outside the pixel-center hull.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        let fx = x - 0.5;
        let fy = y - 0.5;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        // Allow half a pixel of slack at the borders by clamping.
        if !(fx >= -0.5 && fy >= -0.5 && fx <= max_x + 0.5 && fy <= max_y + 0.5) {
            return None;
        }
        let fx = fx.clamp(0.0, max_x);
        let fy = fy.clamp(0.0, max_y);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let (a, b, c, d) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let top = a[ch] as f64 * (1.0 - tx) + b[ch] as f64 * tx;
            let bottom = c[ch] as f64 * (1.0 - tx) + d[ch] as f64 * tx;
            out[ch] = top * (1.0 - ty) + bottom * ty;
        }
        Some(out)
    }

    /// Grayscale `(R + G + B) / 3`, rounded down.
    pub fn gray(&self) -> Vec<u8> {
        self.pixels()
            .map(|p| ((p[0] as u16 + p[1] as u16 + p[2] as u16) / 3) as u8)
            .collect()
    }

    /// Rotates the image 90° clockwise.
    pub fn rotate90(&self) -> Image {
        let (w, h) = (self.width, self.height);
        let mut out = Image {
            width: h,
            height: w,
            data: vec![0; self.data.len()],
        };
        for y in 0..h {
            for x in 0..w {
                out.put(h - 1 - y, x, self.get(x, y));
            }
        }
        out
    }

    /// Binary PPM (`P6`, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, VisionError> {
        let mut pos = 0;
        let mut fields = [0usize; 3];
        let magic = next_token(bytes, &mut pos).ok_or_else(|| decode_err("missing PPM magic"))?;
        if magic != b"P6" {
            return Err(decode_err("only binary P6 PPM is supported"));
        }
        for f in fields.iter_mut() {
            let tok = next_token(bytes, &mut pos).ok_or_else(|| decode_err("truncated PPM header"))?;
            *f = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| decode_err("bad PPM header number"))?;
        }
        let [w, h, maxval] = fields;
        if maxval != 255 {
            return Err(decode_err("only 8-bit PPM (maxval 255) is supported"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let need = w * h * 3;
        if bytes.len() < pos + need {
            return Err(decode_err("truncated PPM raster"));
        }
        Image::from_raw(w, h, bytes[pos..pos + need].to_vec())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, VisionError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| VisionError::Encode(e.to_string()))?;
            w.write_image_data(&self.data)
                .map_err(|e| VisionError::Encode(e.to_string()))?;
        }
        Ok(out)
    }

    /// 8-bit PNG; RGB, RGBA, gray and palette inputs are expanded to RGB.
    pub fn from_png(bytes: &[u8]) -> Result<Self, VisionError> {
        let mut dec = png::Decoder::new(Cursor::new(bytes));
        dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = dec.read_info().map_err(|e| decode_err(e.to_string()))?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| decode_err("PNG too large"))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(|e| decode_err(e.to_string()))?;
        let (w, h) = (info.width as usize, info.height as usize);
        let buf = &buf[..info.buffer_size()];
        let data = match info.color_type {
            png::ColorType::Rgb => buf.to_vec(),
            png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
            png::ColorType::Indexed => return Err(decode_err("unexpanded palette PNG")),
        };
        Image::from_raw(w, h, data)
    }

    /// Sniffs PNG or PPM from the leading bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self, VisionError> {
        if bytes.starts_with(b"\x89PNG") {
            Image::from_png(bytes)
        } else if bytes.starts_with(b"P6") {
            Image::from_ppm(bytes)
        } else {
            Err(decode_err("unrecognized image format (expected PNG or binary PPM)"))
        }
    }
}

fn decode_err(msg: impl Into<String>) -> VisionError {
    VisionError::Decode(msg.into())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}
