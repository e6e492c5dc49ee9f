//! ASCII (P2) PGM reading and writing.
//!
//! Emitted files are byte-exact: `P2\n{width} {height}\n{maxval}\n` followed
//! by one line per row with single-space-separated values.

pub struct Image {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub pixels: Vec<u32>,
}

pub fn encode(width: usize, height: usize, maxval: u32, pixels: &[u32]) -> String {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P2\n{width} {height}\n{maxval}\n");
    for row in pixels.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Image, String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .map(str::to_owned)
        .collect::<Vec<_>>()
        .into_iter();
    if tokens.next().as_deref() != Some("P2") {
        return Err("missing P2 magic".into());
    }
    let mut next_num = |what: &str| -> Result<u64, String> {
        tokens
            .next()
            .ok_or_else(|| format!("missing {what}"))?
            .parse::<u64>()
            .map_err(|e| format!("bad {what}: {e}"))
    };
    let width = next_num("width")? as usize;
    let height = next_num("height")? as usize;
    let maxval = next_num("maxval")? as u32;
    if width == 0 || height == 0 {
        return Err("dimensions must be positive".into());
    }
    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let v = next_num("pixel")? as u32;
        if v > maxval {
            return Err(format!("pixel value {v} exceeds maxval {maxval}"));
        }
        pixels.push(v);
    }
    Ok(Image {
        width,
        height,
        maxval,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = encode(3, 2, 255, &[0, 128, 255, 5, 6, 7]);
        assert_eq!(text, "P2\n3 2\n255\n0 128 255\n5 6 7\n");
        let image = parse(&text).unwrap();
        assert_eq!(image.width, 3);
        assert_eq!(image.height, 2);
        assert_eq!(image.pixels, vec![0, 128, 255, 5, 6, 7]);
    }

    #[test]
    fn parse_tolerates_comments_and_spacing() {
        let image = parse("P2 # a comment\n2 1\n9\n 3\n4 ").unwrap();
        assert_eq!(image.pixels, vec![3, 4]);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse("P5\n1 1\n255\n0").is_err());
        assert!(parse("P2\n1 1\n4\n9").is_err());
        assert!(parse("P2\n1 1\n255").is_err());
    }
}
