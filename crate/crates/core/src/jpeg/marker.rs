pub const SOF0: u8 = 0xC0;
pub const SOF1: u8 = 0xC1;
pub const SOF2: u8 = 0xC2;
pub const DHT: u8 = 0xC4;
pub const DAC: u8 = 0xCC;
pub const RST0: u8 = 0xD0;
pub const RST7: u8 = 0xD7;
pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOS: u8 = 0xDA;
pub const DQT: u8 = 0xDB;
pub const DNL: u8 = 0xDC;
pub const DRI: u8 = 0xDD;
pub const APP0: u8 = 0xE0;
pub const TEM: u8 = 0x01;

/// SOF markers other than the two Huffman-coded sequential ones.
pub fn unsupported_frame(marker: u8) -> Option<&'static str> {
    match marker {
        SOF2 => Some("progressive DCT"),
        0xC3 => Some("lossless"),
        0xC5..=0xC7 => Some("hierarchical"),
        0xC9 | 0xCA | 0xCB | 0xCD | 0xCE | 0xCF => Some("arithmetic coding"),
        _ => None,
    }
}
