use fqe_core::jpeg::{encode_baseline_gray, parse_jpeg, Encoder, JpegError};
use fqe_core::{constant_table, sim, standard_table, synth, GrayImage};

fn sof_offset(bytes: &[u8]) -> usize {
    bytes
        .windows(2)
        .position(|w| w == [0xFF, 0xC0])
        .expect("SOF0")
}

#[test]
fn grid_and_table_survive_the_file() {
    let img = synth::image(3, 64, 48);
    for qf in [10, 50, 75, 90, 100] {
        let t = standard_table(qf).unwrap();
        let parsed = parse_jpeg(&encode_baseline_gray(&img, &t).unwrap()).unwrap();
        assert_eq!(parsed.luminance_table(), &t);
        assert_eq!(parsed.luminance, sim::quantize_image(&img, &t).unwrap());
        assert_eq!((parsed.frame.width, parsed.frame.height), (64, 48));
    }
}

#[test]
fn unaligned_images_are_padded_and_cropped_back() {
    let img = synth::image(8, 37, 21);
    let t = constant_table(1).unwrap();
    let parsed = parse_jpeg(&encode_baseline_gray(&img, &t).unwrap()).unwrap();
    assert_eq!(parsed.luminance.width_blocks(), 5);
    assert_eq!(parsed.luminance.height_blocks(), 3);
    let px = parsed.luminance_pixels();
    assert_eq!((px.width(), px.height()), (37, 21));
    let max_err = px
        .pixels()
        .iter()
        .zip(img.pixels())
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap();
    assert!(max_err <= 1, "near-lossless decode, got error {max_err}");
}

#[test]
fn restart_markers_round_trip() {
    let img = synth::patch(4, 64);
    let t = standard_table(80).unwrap();
    let plain = parse_jpeg(&encode_baseline_gray(&img, &t).unwrap()).unwrap();
    for interval in [1, 3, 7, 64] {
        let bytes = Encoder::new()
            .restart_interval(interval)
            .encode(&img, &t)
            .unwrap();
        let parsed = parse_jpeg(&bytes).unwrap();
        assert_eq!(parsed.frame.restart_interval, interval);
        assert_eq!(parsed.luminance, plain.luminance);
    }
}

#[test]
fn extreme_coefficients_round_trip() {
    // Checkerboards and hard edges push AC magnitudes to the top categories.
    let mut px = vec![0u8; 64 * 16];
    for (i, p) in px.iter_mut().enumerate() {
        let (x, y) = (i % 64, i / 64);
        *p = if (x + y) % 2 == 0 { 255 } else { 0 };
        if x >= 32 {
            *p = if x < 40 { 255 } else { 0 };
        }
    }
    let img = GrayImage::new(64, 16, px).unwrap();
    let t = constant_table(1).unwrap();
    let parsed = parse_jpeg(&encode_baseline_gray(&img, &t).unwrap()).unwrap();
    assert_eq!(parsed.luminance, sim::quantize_image(&img, &t).unwrap());
}

#[test]
fn rejects_non_baseline_and_corrupt_streams() {
    let img = synth::patch(2, 16);
    let t = standard_table(75).unwrap();
    let good = encode_baseline_gray(&img, &t).unwrap();

    assert_eq!(parse_jpeg(b"").unwrap_err(), JpegError::NotJpeg);
    assert_eq!(parse_jpeg(&good[2..]).unwrap_err(), JpegError::NotJpeg);

    for marker in [0xC2u8, 0xC3, 0xC9] {
        let mut b = good.clone();
        b[sof_offset(&good) + 1] = marker;
        assert!(
            matches!(parse_jpeg(&b), Err(JpegError::Unsupported(_))),
            "marker {marker:#x}"
        );
    }

    assert!(parse_jpeg(&good[..good.len() / 2]).is_err());

    let sos = good.windows(2).position(|w| w == [0xFF, 0xDA]).unwrap();
    let dht = good.windows(2).position(|w| w == [0xFF, 0xC4]).unwrap();
    // Drop all DHT segments: the scan then names undefined tables.
    let mut no_dht = good[..dht].to_vec();
    no_dht.extend_from_slice(&good[sos..]);
    assert!(matches!(
        parse_jpeg(&no_dht),
        Err(JpegError::MissingHuffmanTable { .. })
    ));
}

#[test]
fn sof1_is_accepted() {
    let img = synth::patch(6, 16);
    let t = standard_table(60).unwrap();
    let mut b = encode_baseline_gray(&img, &t).unwrap();
    let at = sof_offset(&b);
    b[at + 1] = 0xC1;
    let parsed = parse_jpeg(&b).unwrap();
    assert_eq!(parsed.frame.sof_marker, 0xC1);
    assert_eq!(parsed.luminance, sim::quantize_image(&img, &t).unwrap());
}
