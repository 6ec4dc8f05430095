#![no_main]

use libfuzzer_sys::fuzz_target;
use photonet::trace::TraceTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = TraceTable::parse(text) {
        let written = table.to_csv();
        let reread = TraceTable::parse(&written).expect("written trace parses");
        assert_eq!(reread.to_csv(), written);
    }
});
