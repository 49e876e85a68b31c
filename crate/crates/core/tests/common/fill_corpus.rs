//! Column-autocomplete examples: two or three user fills plus held-out rows
//! the inferred program should predict.

use workbench_core::pattern::{Example, InputRow};

pub struct FillCase {
    pub name: &'static str,
    pub examples: Vec<Example>,
    pub held_out: Vec<(InputRow, String)>,
}

fn case(name: &'static str, cols: &[&str], rows: &[(&[&str], &str)], given: usize) -> FillCase {
    let row = |vals: &[&str]| -> InputRow { cols.iter().zip(vals).map(|(c, v)| (c.to_string(), Some(v.to_string()))).collect() };
    let examples = rows[..given].iter().map(|(v, o)| Example { inputs: row(v), output: o.to_string() }).collect();
    let held_out = rows[given..].iter().map(|(v, o)| (row(v), o.to_string())).collect();
    FillCase { name, examples, held_out }
}

pub fn corpus() -> Vec<FillCase> {
    vec![
        case(
            "full name from first and last",
            &["First", "Last"],
            &[(&["Ada", "Lovelace"], "Ada Lovelace"), (&["Alan", "Turing"], "Alan Turing"), (&["Grace", "Hopper"], "Grace Hopper")],
            2,
        ),
        case(
            "last comma first",
            &["First", "Last"],
            &[(&["Ada", "Lovelace"], "Lovelace, Ada"), (&["Alan", "Turing"], "Turing, Alan"), (&["Grace", "Hopper"], "Hopper, Grace")],
            2,
        ),
        case(
            "first name from full name",
            &["Name"],
            &[(&["Ada Lovelace"], "Ada"), (&["Alan Turing"], "Alan"), (&["Grace Hopper"], "Grace")],
            2,
        ),
        case(
            "last name from full name",
            &["Name"],
            &[(&["Ada King Lovelace"], "Lovelace"), (&["Alan Turing"], "Turing"), (&["Grace B Hopper"], "Hopper")],
            2,
        ),
        case(
            "email user",
            &["Email"],
            &[(&["ada@math.org"], "ada"), (&["alan.t@cs.ac.uk"], "alan.t"), (&["grace@navy.mil"], "grace")],
            2,
        ),
        case(
            "email domain",
            &["Email"],
            &[(&["ada@math.org"], "math.org"), (&["alan@cs.ac.uk"], "cs.ac.uk"), (&["grace@navy.mil"], "navy.mil")],
            2,
        ),
        case(
            "price number",
            &["Price"],
            &[(&["$1,299.00"], "1,299.00"), (&["$849.99"], "849.99"), (&["$2,100.50"], "2,100.50")],
            2,
        ),
        case(
            "price digits only",
            &["Price"],
            &[(&["$1,299"], "1299"), (&["$2,450"], "2450"), (&["$3,100"], "3100")],
            2,
        ),
        case(
            "lower case",
            &["Brand"],
            &[(&["CANON"], "canon"), (&["Nikon"], "nikon"), (&["SoNy"], "sony")],
            2,
        ),
        case(
            "upper case",
            &["Code"],
            &[(&["usd"], "USD"), (&["eur"], "EUR"), (&["Gbp"], "GBP")],
            2,
        ),
        case(
            "title case",
            &["City"],
            &[(&["new york"], "New York"), (&["SAN JOSE"], "San Jose"), (&["los angeles"], "Los Angeles")],
            2,
        ),
        case(
            "year from date",
            &["Date"],
            &[(&["2023-04-17"], "2023"), (&["2021-11-02"], "2021"), (&["2019-01-30"], "2019")],
            2,
        ),
        case(
            "month from date",
            &["Date"],
            &[(&["2023-04-17"], "04"), (&["2021-11-02"], "11"), (&["2019-01-30"], "01")],
            2,
        ),
        case(
            "url host",
            &["Url"],
            &[(&["https://shop.example/cams"], "shop.example"), (&["https://b.test/x/y"], "b.test"), (&["https://cams.io/"], "cams.io")],
            2,
        ),
        case(
            "file extension",
            &["File"],
            &[(&["report.pdf"], "pdf"), (&["photo.final.jpg"], "jpg"), (&["notes.txt"], "txt")],
            2,
        ),
        case(
            "rating number",
            &["Rating"],
            &[(&["4.5 out of 5 stars"], "4.5"), (&["3.8 out of 5 stars"], "3.8"), (&["4.9 out of 5 stars"], "4.9")],
            2,
        ),
        case(
            "megapixels",
            &["Sensor"],
            &[(&["24.2MP APS-C"], "24.2"), (&["45.7MP Full Frame"], "45.7"), (&["61MP Full Frame"], "61")],
            2,
        ),
        case(
            "constant label",
            &["Model"],
            &[(&["EOS R6"], "Camera"), (&["Z6 II"], "Camera"), (&["A7 IV"], "Camera")],
            2,
        ),
        case(
            "copy column",
            &["Model", "Brand"],
            &[(&["EOS R6", "Canon"], "Canon"), (&["Z6 II", "Nikon"], "Nikon"), (&["A7 IV", "Sony"], "Sony")],
            2,
        ),
        case(
            "city and state",
            &["City", "State"],
            &[(&["Austin", "TX"], "Austin, TX"), (&["Denver", "CO"], "Denver, CO"), (&["Boise", "ID"], "Boise, ID")],
            2,
        ),
        case(
            "last model word",
            &["Model"],
            &[(&["Sony Alpha 7 IV"], "IV"), (&["Canon EOS R5 C"], "C"), (&["Nikon Z6 II"], "II")],
            2,
        ),
        case(
            "area code",
            &["Phone"],
            &[(&["(512) 555-0101"], "512"), (&["(303) 555-0199"], "303"), (&["(208) 555-0123"], "208")],
            2,
        ),
        case(
            "brand dash id",
            &["Brand", "Id"],
            &[(&["Canon", "17"], "Canon-17"), (&["Nikon", "4"], "Nikon-4"), (&["Sony", "230"], "Sony-230")],
            2,
        ),
        case(
            "lower first word",
            &["Title"],
            &[(&["Canon EOS R6 Body"], "canon"), (&["Nikon Z6 II Kit"], "nikon"), (&["Sony A7 IV"], "sony")],
            2,
        ),
        case(
            "hash tag",
            &["Tag"],
            &[(&["travel"], "#travel"), (&["street"], "#street"), (&["macro"], "#macro")],
            2,
        ),
        case(
            "amount with currency suffix",
            &["Amount"],
            &[(&["1299"], "1299 USD"), (&["849"], "849 USD"), (&["2100"], "2100 USD")],
            2,
        ),
        case(
            "slug",
            &["Title"],
            &[(&["Best-Lens"], "bestlens"), (&["Wide-Angle"], "wideangle"), (&["Tele-Zoom"], "telezoom")],
            2,
        ),
        case(
            "first two words",
            &["Title"],
            &[(&["Canon EOS R6 Body"], "Canon EOS"), (&["Nikon Z6 II Kit"], "Nikon Z6"), (&["Sony A7 IV"], "Sony A7")],
            2,
        ),
        case(
            "zip code",
            &["Address"],
            &[(&["12 Main St, Austin TX 78701"], "78701"), (&["9 Elm Rd, Denver CO 80202"], "80202"), (&["4 Oak Ave, Boise ID 83702"], "83702")],
            2,
        ),
        case(
            "model code",
            &["Title"],
            &[(&["Sony A7 IV"], "A7-IV"), (&["Canon EOS R6"], "EOS-R6"), (&["Nikon Z6 II"], "Z6-II")],
            2,
        ),
    ]
}
