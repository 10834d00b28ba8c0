//! Geographic intent from keyword text via a hierarchical gazetteer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{normalize_keyword, tokens};

pub const CONTINENTS: [&str; 7] = [
    "africa",
    "antarctica",
    "asia",
    "europe",
    "north america",
    "oceania",
    "south america",
];

const BUNDLED: &str = include_str!("../../data/gazetteer.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Continent,
    Country,
    City,
}

impl std::str::FromStr for GeoLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continent" => Ok(GeoLevel::Continent),
            "country" => Ok(GeoLevel::Country),
            "city" => Ok(GeoLevel::City),
            other => Err(Error::Parse(format!("unknown geo level {other:?}"))),
        }
    }
}

impl std::fmt::Display for GeoLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GeoLevel::Continent => "continent",
            GeoLevel::Country => "country",
            GeoLevel::City => "city",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeoTag {
    pub continent: Option<String>,
    pub country: Option<String>,
    pub city: Option<String>,
}

impl GeoTag {
    pub fn at(&self, level: GeoLevel) -> Option<&str> {
        match level {
            GeoLevel::Continent => self.continent.as_deref(),
            GeoLevel::Country => self.country.as_deref(),
            GeoLevel::City => self.city.as_deref(),
        }
    }
}

#[derive(Debug, Clone)]
struct Alias {
    level: GeoLevel,
    name: String,
}

/// City → country → continent hierarchy plus a surface-form alias table.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    city_country: BTreeMap<String, String>,
    country_continent: BTreeMap<String, String>,
    aliases: HashMap<String, Alias>,
    max_alias_tokens: usize,
}

#[derive(Debug, Deserialize)]
struct Row {
    alias: String,
    level: String,
    city: String,
    country: String,
    continent: String,
}

impl Gazetteer {
    /// The curated seed shipped with the crate.
    pub fn bundled() -> Self {
        let mut g = Gazetteer::default();
        g.extend_csv(BUNDLED.as_bytes()).expect("bundled gazetteer is valid");
        g
    }

    /// Bundled seed extended by every `*.csv` table in `dir` (sorted by
    /// file name).
    pub fn bundled_with_dir(dir: &Path) -> Result<Self> {
        let mut g = Gazetteer::bundled();
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            let file = std::fs::File::open(&f).map_err(|e| Error::io(&f, e))?;
            g.extend_csv(file)?;
        }
        Ok(g)
    }

    /// Add rows from a CSV table with columns
    /// `alias,level,city,country,continent`.
    pub fn extend_csv<R: Read>(&mut self, source: R) -> Result<()> {
        let mut rdr = csv::Reader::from_reader(source);
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Parse(format!("gazetteer: {e}")))?;
            self.add(row)?;
        }
        Ok(())
    }

    fn add(&mut self, row: Row) -> Result<()> {
        let level: GeoLevel = row.level.parse()?;
        let norm = |s: &str| normalize_keyword(s).unwrap_or_default();
        let (alias, city, country, continent) = (norm(&row.alias), norm(&row.city), norm(&row.country), norm(&row.continent));
        if alias.is_empty() {
            return Err(Error::Parse("gazetteer row with empty alias".into()));
        }
        if !CONTINENTS.contains(&continent.as_str()) {
            return Err(Error::Data(format!("unknown continent {continent:?}")));
        }
        if level >= GeoLevel::Country {
            if country.is_empty() {
                return Err(Error::Data(format!("alias {alias:?} lacks a country")));
            }
            insert_consistent(&mut self.country_continent, &country, &continent)?;
        }
        if level == GeoLevel::City {
            if city.is_empty() {
                return Err(Error::Data(format!("alias {alias:?} lacks a city")));
            }
            insert_consistent(&mut self.city_country, &city, &country)?;
        }
        let name = match level {
            GeoLevel::Continent => continent,
            GeoLevel::Country => country,
            GeoLevel::City => city,
        };
        self.max_alias_tokens = self.max_alias_tokens.max(tokens(&alias).count());
        self.aliases.insert(alias, Alias { level, name });
        Ok(())
    }

    pub fn continent_of_country(&self, country: &str) -> Option<&str> {
        self.country_continent.get(country).map(String::as_str)
    }

    pub fn country_of_city(&self, city: &str) -> Option<&str> {
        self.city_country.get(city).map(String::as_str)
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.country_continent.keys().map(String::as_str)
    }

    pub fn cities(&self) -> impl Iterator<Item = &str> {
        self.city_country.keys().map(String::as_str)
    }

    /// Cities whose continent is `continent`, sorted.
    pub fn cities_in(&self, continent: &str) -> Vec<&str> {
        self.city_country
            .iter()
            .filter(|(_, country)| self.continent_of_country(country) == Some(continent))
            .map(|(c, _)| c.as_str())
            .collect()
    }

    /// Number of distinct labels at a level.
    pub fn distinct(&self, level: GeoLevel) -> BTreeSet<&str> {
        match level {
            GeoLevel::Continent => CONTINENTS.iter().copied().collect(),
            GeoLevel::Country => self.countries().collect(),
            GeoLevel::City => self.cities().collect(),
        }
    }

    fn complete(&self, level: GeoLevel, name: &str) -> GeoTag {
        let mut tag = GeoTag::default();
        let mut country = None;
        match level {
            GeoLevel::City => {
                tag.city = Some(name.to_string());
                country = self.country_of_city(name).map(str::to_string);
            }
            GeoLevel::Country => country = Some(name.to_string()),
            GeoLevel::Continent => tag.continent = Some(name.to_string()),
        }
        if let Some(c) = country {
            tag.continent = self.continent_of_country(&c).map(str::to_string);
            tag.country = Some(c);
        }
        tag
    }
}

fn insert_consistent(map: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    match map.get(key) {
        Some(v) if v != value => Err(Error::Data(format!("{key:?} maps to both {v:?} and {value:?}"))),
        Some(_) => Ok(()),
        None => {
            map.insert(key.to_string(), value.to_string());
            Ok(())
        }
    }
}

/// Tag a canonical keyword. Aliases are matched greedily left to right,
/// longest first; the most specific matched level wins (leftmost on ties)
/// and the hierarchy is completed upward from it.
pub fn tag_geography(keyword: &str, g: &Gazetteer) -> GeoTag {
    let toks: Vec<&str> = tokens(keyword).collect();
    let mut best: Option<&Alias> = None;
    let mut i = 0;
    while i < toks.len() {
        let mut matched = 0;
        for len in (1..=g.max_alias_tokens.min(toks.len() - i)).rev() {
            let cand = toks[i..i + len].join(" ");
            if let Some(a) = g.aliases.get(&cand) {
                if best.is_none_or(|b| a.level > b.level) {
                    best = Some(a);
                }
                matched = len;
                break;
            }
        }
        i += matched.max(1);
    }
    best.map(|a| g.complete(a.level, &a.name)).unwrap_or_default()
}
