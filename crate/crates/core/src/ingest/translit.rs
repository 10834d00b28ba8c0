//! ASCII transliteration for Latin-1 Supplement, Latin Extended-A and common
//! typographic symbols. Characters absent from the table are dropped.

pub(crate) static TABLE: &[(char, &str)] = &[
    ('\u{00a0}', " "), // no-break space
    ('\u{00a1}', "!"), // inverted exclamation mark
    ('\u{00a2}', "c"), // cent sign
    ('\u{00a3}', "L"), // pound sign
    ('\u{00a4}', " "), // currency sign
    ('\u{00a5}', "Y"), // yen sign
    ('\u{00a6}', "|"), // broken bar
    ('\u{00a7}', " "), // section sign
    ('\u{00a8}', " "), // diaeresis
    ('\u{00a9}', "(c)"), // copyright sign
    ('\u{00aa}', "a"), // feminine ordinal indicator
    ('\u{00ab}', "\""), // left-pointing double angle quotation mark
    ('\u{00ac}', "-"), // not sign
    ('\u{00ad}', ""), // soft hyphen
    ('\u{00ae}', "(r)"), // registered sign
    ('\u{00af}', " "), // macron
    ('\u{00b0}', " deg "), // degree sign
    ('\u{00b2}', "2"), // superscript two
    ('\u{00b3}', "3"), // superscript three
    ('\u{00b4}', "'"), // acute accent
    ('\u{00b5}', "u"), // micro sign
    ('\u{00b6}', " "), // pilcrow sign
    ('\u{00b7}', " "), // middle dot
    ('\u{00b8}', " "), // cedilla
    ('\u{00b9}', "1"), // superscript one
    ('\u{00ba}', "o"), // masculine ordinal indicator
    ('\u{00bb}', "\""), // right-pointing double angle quotation mark
    ('\u{00bc}', "1/4"), // vulgar fraction one quarter
    ('\u{00bd}', "1/2"), // vulgar fraction one half
    ('\u{00be}', "3/4"), // vulgar fraction three quarters
    ('\u{00bf}', "?"), // inverted question mark
    ('\u{00c0}', "A"), // latin capital letter a with grave
    ('\u{00c1}', "A"), // latin capital letter a with acute
    ('\u{00c2}', "A"), // latin capital letter a with circumflex
    ('\u{00c3}', "A"), // latin capital letter a with tilde
    ('\u{00c4}', "A"), // latin capital letter a with diaeresis
    ('\u{00c5}', "A"), // latin capital letter a with ring above
    ('\u{00c6}', "AE"), // latin capital letter ae
    ('\u{00c7}', "C"), // latin capital letter c with cedilla
    ('\u{00c8}', "E"), // latin capital letter e with grave
    ('\u{00c9}', "E"), // latin capital letter e with acute
    ('\u{00ca}', "E"), // latin capital letter e with circumflex
    ('\u{00cb}', "E"), // latin capital letter e with diaeresis
    ('\u{00cc}', "I"), // latin capital letter i with grave
    ('\u{00cd}', "I"), // latin capital letter i with acute
    ('\u{00ce}', "I"), // latin capital letter i with circumflex
    ('\u{00cf}', "I"), // latin capital letter i with diaeresis
    ('\u{00d0}', "D"), // latin capital letter eth
    ('\u{00d1}', "N"), // latin capital letter n with tilde
    ('\u{00d2}', "O"), // latin capital letter o with grave
    ('\u{00d3}', "O"), // latin capital letter o with acute
    ('\u{00d4}', "O"), // latin capital letter o with circumflex
    ('\u{00d5}', "O"), // latin capital letter o with tilde
    ('\u{00d6}', "O"), // latin capital letter o with diaeresis
    ('\u{00d7}', "x"), // multiplication sign
    ('\u{00d8}', "O"), // latin capital letter o with stroke
    ('\u{00d9}', "U"), // latin capital letter u with grave
    ('\u{00da}', "U"), // latin capital letter u with acute
    ('\u{00db}', "U"), // latin capital letter u with circumflex
    ('\u{00dc}', "U"), // latin capital letter u with diaeresis
    ('\u{00dd}', "Y"), // latin capital letter y with acute
    ('\u{00de}', "TH"), // latin capital letter thorn
    ('\u{00df}', "ss"), // latin small letter sharp s
    ('\u{00e0}', "a"), // latin small letter a with grave
    ('\u{00e1}', "a"), // latin small letter a with acute
    ('\u{00e2}', "a"), // latin small letter a with circumflex
    ('\u{00e3}', "a"), // latin small letter a with tilde
    ('\u{00e4}', "a"), // latin small letter a with diaeresis
    ('\u{00e5}', "a"), // latin small letter a with ring above
    ('\u{00e6}', "ae"), // latin small letter ae
    ('\u{00e7}', "c"), // latin small letter c with cedilla
    ('\u{00e8}', "e"), // latin small letter e with grave
    ('\u{00e9}', "e"), // latin small letter e with acute
    ('\u{00ea}', "e"), // latin small letter e with circumflex
    ('\u{00eb}', "e"), // latin small letter e with diaeresis
    ('\u{00ec}', "i"), // latin small letter i with grave
    ('\u{00ed}', "i"), // latin small letter i with acute
    ('\u{00ee}', "i"), // latin small letter i with circumflex
    ('\u{00ef}', "i"), // latin small letter i with diaeresis
    ('\u{00f0}', "d"), // latin small letter eth
    ('\u{00f1}', "n"), // latin small letter n with tilde
    ('\u{00f2}', "o"), // latin small letter o with grave
    ('\u{00f3}', "o"), // latin small letter o with acute
    ('\u{00f4}', "o"), // latin small letter o with circumflex
    ('\u{00f5}', "o"), // latin small letter o with tilde
    ('\u{00f6}', "o"), // latin small letter o with diaeresis
    ('\u{00f7}', "/"), // division sign
    ('\u{00f8}', "o"), // latin small letter o with stroke
    ('\u{00f9}', "u"), // latin small letter u with grave
    ('\u{00fa}', "u"), // latin small letter u with acute
    ('\u{00fb}', "u"), // latin small letter u with circumflex
    ('\u{00fc}', "u"), // latin small letter u with diaeresis
    ('\u{00fd}', "y"), // latin small letter y with acute
    ('\u{00fe}', "th"), // latin small letter thorn
    ('\u{00ff}', "y"), // latin small letter y with diaeresis
    ('\u{0100}', "A"), // latin capital letter a with macron
    ('\u{0101}', "a"), // latin small letter a with macron
    ('\u{0102}', "A"), // latin capital letter a with breve
    ('\u{0103}', "a"), // latin small letter a with breve
    ('\u{0104}', "A"), // latin capital letter a with ogonek
    ('\u{0105}', "a"), // latin small letter a with ogonek
    ('\u{0106}', "C"), // latin capital letter c with acute
    ('\u{0107}', "c"), // latin small letter c with acute
    ('\u{0108}', "C"), // latin capital letter c with circumflex
    ('\u{0109}', "c"), // latin small letter c with circumflex
    ('\u{010a}', "C"), // latin capital letter c with dot above
    ('\u{010b}', "c"), // latin small letter c with dot above
    ('\u{010c}', "C"), // latin capital letter c with caron
    ('\u{010d}', "c"), // latin small letter c with caron
    ('\u{010e}', "D"), // latin capital letter d with caron
    ('\u{010f}', "d"), // latin small letter d with caron
    ('\u{0110}', "D"), // latin capital letter d with stroke
    ('\u{0111}', "d"), // latin small letter d with stroke
    ('\u{0112}', "E"), // latin capital letter e with macron
    ('\u{0113}', "e"), // latin small letter e with macron
    ('\u{0114}', "E"), // latin capital letter e with breve
    ('\u{0115}', "e"), // latin small letter e with breve
    ('\u{0116}', "E"), // latin capital letter e with dot above
    ('\u{0117}', "e"), // latin small letter e with dot above
    ('\u{0118}', "E"), // latin capital letter e with ogonek
    ('\u{0119}', "e"), // latin small letter e with ogonek
    ('\u{011a}', "E"), // latin capital letter e with caron
    ('\u{011b}', "e"), // latin small letter e with caron
    ('\u{011c}', "G"), // latin capital letter g with circumflex
    ('\u{011d}', "g"), // latin small letter g with circumflex
    ('\u{011e}', "G"), // latin capital letter g with breve
    ('\u{011f}', "g"), // latin small letter g with breve
    ('\u{0120}', "G"), // latin capital letter g with dot above
    ('\u{0121}', "g"), // latin small letter g with dot above
    ('\u{0122}', "G"), // latin capital letter g with cedilla
    ('\u{0123}', "g"), // latin small letter g with cedilla
    ('\u{0124}', "H"), // latin capital letter h with circumflex
    ('\u{0125}', "h"), // latin small letter h with circumflex
    ('\u{0126}', "H"), // latin capital letter h with stroke
    ('\u{0127}', "h"), // latin small letter h with stroke
    ('\u{0128}', "I"), // latin capital letter i with tilde
    ('\u{0129}', "i"), // latin small letter i with tilde
    ('\u{012a}', "I"), // latin capital letter i with macron
    ('\u{012b}', "i"), // latin small letter i with macron
    ('\u{012c}', "I"), // latin capital letter i with breve
    ('\u{012d}', "i"), // latin small letter i with breve
    ('\u{012e}', "I"), // latin capital letter i with ogonek
    ('\u{012f}', "i"), // latin small letter i with ogonek
    ('\u{0130}', "I"), // latin capital letter i with dot above
    ('\u{0131}', "i"), // latin small letter dotless i
    ('\u{0132}', "IJ"), // latin capital ligature ij
    ('\u{0133}', "ij"), // latin small ligature ij
    ('\u{0134}', "J"), // latin capital letter j with circumflex
    ('\u{0135}', "j"), // latin small letter j with circumflex
    ('\u{0136}', "K"), // latin capital letter k with cedilla
    ('\u{0137}', "k"), // latin small letter k with cedilla
    ('\u{0138}', "k"), // latin small letter kra
    ('\u{0139}', "L"), // latin capital letter l with acute
    ('\u{013a}', "l"), // latin small letter l with acute
    ('\u{013b}', "L"), // latin capital letter l with cedilla
    ('\u{013c}', "l"), // latin small letter l with cedilla
    ('\u{013d}', "L"), // latin capital letter l with caron
    ('\u{013e}', "l"), // latin small letter l with caron
    ('\u{013f}', "L"), // latin capital letter l with middle dot
    ('\u{0140}', "l"), // latin small letter l with middle dot
    ('\u{0141}', "L"), // latin capital letter l with stroke
    ('\u{0142}', "l"), // latin small letter l with stroke
    ('\u{0143}', "N"), // latin capital letter n with acute
    ('\u{0144}', "n"), // latin small letter n with acute
    ('\u{0145}', "N"), // latin capital letter n with cedilla
    ('\u{0146}', "n"), // latin small letter n with cedilla
    ('\u{0147}', "N"), // latin capital letter n with caron
    ('\u{0148}', "n"), // latin small letter n with caron
    ('\u{0149}', "n"), // latin small letter n preceded by apostrophe
    ('\u{014a}', "N"), // latin capital letter eng
    ('\u{014b}', "n"), // latin small letter eng
    ('\u{014c}', "O"), // latin capital letter o with macron
    ('\u{014d}', "o"), // latin small letter o with macron
    ('\u{014e}', "O"), // latin capital letter o with breve
    ('\u{014f}', "o"), // latin small letter o with breve
    ('\u{0150}', "O"), // latin capital letter o with double acute
    ('\u{0151}', "o"), // latin small letter o with double acute
    ('\u{0152}', "OE"), // latin capital ligature oe
    ('\u{0153}', "oe"), // latin small ligature oe
    ('\u{0154}', "R"), // latin capital letter r with acute
    ('\u{0155}', "r"), // latin small letter r with acute
    ('\u{0156}', "R"), // latin capital letter r with cedilla
    ('\u{0157}', "r"), // latin small letter r with cedilla
    ('\u{0158}', "R"), // latin capital letter r with caron
    ('\u{0159}', "r"), // latin small letter r with caron
    ('\u{015a}', "S"), // latin capital letter s with acute
    ('\u{015b}', "s"), // latin small letter s with acute
    ('\u{015c}', "S"), // latin capital letter s with circumflex
    ('\u{015d}', "s"), // latin small letter s with circumflex
    ('\u{015e}', "S"), // latin capital letter s with cedilla
    ('\u{015f}', "s"), // latin small letter s with cedilla
    ('\u{0160}', "S"), // latin capital letter s with caron
    ('\u{0161}', "s"), // latin small letter s with caron
    ('\u{0162}', "T"), // latin capital letter t with cedilla
    ('\u{0163}', "t"), // latin small letter t with cedilla
    ('\u{0164}', "T"), // latin capital letter t with caron
    ('\u{0165}', "t"), // latin small letter t with caron
    ('\u{0166}', "T"), // latin capital letter t with stroke
    ('\u{0167}', "t"), // latin small letter t with stroke
    ('\u{0168}', "U"), // latin capital letter u with tilde
    ('\u{0169}', "u"), // latin small letter u with tilde
    ('\u{016a}', "U"), // latin capital letter u with macron
    ('\u{016b}', "u"), // latin small letter u with macron
    ('\u{016c}', "U"), // latin capital letter u with breve
    ('\u{016d}', "u"), // latin small letter u with breve
    ('\u{016e}', "U"), // latin capital letter u with ring above
    ('\u{016f}', "u"), // latin small letter u with ring above
    ('\u{0170}', "U"), // latin capital letter u with double acute
    ('\u{0171}', "u"), // latin small letter u with double acute
    ('\u{0172}', "U"), // latin capital letter u with ogonek
    ('\u{0173}', "u"), // latin small letter u with ogonek
    ('\u{0174}', "W"), // latin capital letter w with circumflex
    ('\u{0175}', "w"), // latin small letter w with circumflex
    ('\u{0176}', "Y"), // latin capital letter y with circumflex
    ('\u{0177}', "y"), // latin small letter y with circumflex
    ('\u{0178}', "Y"), // latin capital letter y with diaeresis
    ('\u{0179}', "Z"), // latin capital letter z with acute
    ('\u{017a}', "z"), // latin small letter z with acute
    ('\u{017b}', "Z"), // latin capital letter z with dot above
    ('\u{017c}', "z"), // latin small letter z with dot above
    ('\u{017d}', "Z"), // latin capital letter z with caron
    ('\u{017e}', "z"), // latin small letter z with caron
    ('\u{017f}', "s"), // latin small letter long s
    ('\u{2013}', "-"), // en dash
    ('\u{2014}', "-"), // em dash
    ('\u{2018}', "'"), // left single quotation mark
    ('\u{2019}', "'"), // right single quotation mark
    ('\u{201a}', "'"), // single low-9 quotation mark
    ('\u{201c}', "\""), // left double quotation mark
    ('\u{201d}', "\""), // right double quotation mark
    ('\u{201e}', "\""), // double low-9 quotation mark
    ('\u{2022}', " "), // bullet
    ('\u{2026}', "..."), // horizontal ellipsis
    ('\u{20ac}', "EUR"), // euro sign
    ('\u{2122}', "tm"), // trade mark sign
];

pub(crate) fn lookup(c: char) -> Option<&'static str> {
    TABLE
        .binary_search_by_key(&c, |&(k, _)| k)
        .ok()
        .map(|i| TABLE[i].1)
}
