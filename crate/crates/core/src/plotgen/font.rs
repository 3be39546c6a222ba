//! Tiny embedded 5x7 bitmap font for axis tick labels. Only the characters
//! that can appear in numeric labels are included.

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

fn glyph(c: char) -> Option<[u8; GLYPH_H]> {
    Some(match c {
        '0' => [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
        '1' => [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        '2' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
        '3' => [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
        '4' => [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
        '5' => [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
        '6' => [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
        '7' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
        '8' => [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
        '9' => [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
        '-' => [0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000],
        '+' => [0b00000, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0b00000],
        '.' => [0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100],
        'e' => [0b00000, 0b00000, 0b01110, 0b10001, 0b11111, 0b10000, 0b01110],
        _ => return None,
    })
}

/// Pixel width of `text` at the given integer scale (includes inter-glyph gaps).
pub fn text_width(text: &str, scale: usize) -> usize {
    if text.is_empty() {
        0
    } else {
        text.chars().count() * (GLYPH_W + 1) * scale - scale
    }
}

pub fn text_height(scale: usize) -> usize {
    GLYPH_H * scale
}

/// Stamps `text` into an RGB buffer with its top-left corner at (x, y).
/// Unknown characters are skipped. Clips at buffer edges.
pub fn draw_text(
    buf: &mut [u8],
    width: usize,
    height: usize,
    x: i64,
    y: i64,
    text: &str,
    scale: usize,
    color: [u8; 3],
) {
    let mut cx = x;
    for c in text.chars() {
        if let Some(rows) = glyph(c) {
            for (ry, row) in rows.iter().enumerate() {
                for rx in 0..GLYPH_W {
                    if row & (1 << (GLYPH_W - 1 - rx)) != 0 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                let px = cx + (rx * scale + sx) as i64;
                                let py = y + (ry * scale + sy) as i64;
                                if px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
                                    let idx = (py as usize * width + px as usize) * 3;
                                    buf[idx..idx + 3].copy_from_slice(&color);
                                }
                            }
                        }
                    }
                }
            }
        }
        cx += ((GLYPH_W + 1) * scale) as i64;
    }
}
