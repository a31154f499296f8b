//! On-disk cohort layout:
//!
//! ```text
//! <dir>/manifest.json          sample ids, labels, file names, generating parameters
//! <dir>/reference.fasta        reference sequences in network order (generated cohorts)
//! <dir>/positions/<gene>.txt   "polymorphic:" and "pathogenic:" lines of sorted positions
//! <dir>/samples/<id>.fasta     one record per gene, network order
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Cohort, CohortParams, DatagenError, GeneVariants, PositionLists, SampleInfo, VariantSite,
};
use crate::seq::{parse_fasta, write_fasta, Label, NetworkSample};

const LINE_WIDTH: usize = 70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub id: String,
    pub label: Label,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneEntry {
    pub id: String,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    /// Absent for cohorts assembled from external FASTA files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<CohortParams>,
    pub genes: Vec<GeneEntry>,
    pub samples: Vec<ManifestSample>,
}

impl CohortManifest {
    pub fn load(dir: &Path) -> Result<Self, DatagenError> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(|e| DatagenError::Store(format!("manifest.json: {e}")))
    }

    /// Reads one sample's FASTA and checks it against the manifest's gene list.
    pub fn read_sample(&self, dir: &Path, index: usize) -> Result<NetworkSample, DatagenError> {
        let entry = &self.samples[index];
        let text = fs::read_to_string(dir.join("samples").join(&entry.file))?;
        let genes = parse_fasta(&text)?;
        if genes.len() != self.genes.len()
            || genes.iter().zip(&self.genes).any(|(g, e)| g.id() != e.id)
        {
            return Err(DatagenError::Store(format!(
                "sample '{}' does not list the manifest's genes in order",
                entry.id
            )));
        }
        Ok(NetworkSample {
            sample_id: entry.id.clone(),
            label: entry.label,
            genes,
        })
    }
}

fn positions_text(gene: &GeneVariants) -> String {
    let join = |v: &[usize]| {
        v.iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut text = format!(
        "polymorphic: {}\npathogenic: {}\n",
        join(&gene.positions.polymorphic),
        join(&gene.positions.pathogenic)
    );
    if let Some(patient) = &gene.patient_pathogenic {
        text.push_str(&format!("pathogenic_patient: {}\n", join(patient)));
    }
    text
}

fn parse_positions(text: &str) -> Result<(PositionLists, Option<Vec<usize>>), DatagenError> {
    let mut lists = PositionLists::default();
    let mut patient = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| DatagenError::Store(format!("bad positions line '{line}'")))?;
        let values = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| DatagenError::Store(format!("position '{t}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match key.trim() {
            "polymorphic" => lists.polymorphic = values,
            "pathogenic" => lists.pathogenic = values,
            "pathogenic_patient" => patient = Some(values),
            other => {
                return Err(DatagenError::Store(format!(
                    "unknown positions list '{other}'"
                )))
            }
        }
    }
    Ok((lists, patient))
}

fn positions_path(dir: &Path, gene: &str) -> PathBuf {
    dir.join("positions").join(format!("{gene}.txt"))
}

/// Writes every sample and the cohort's metadata under `dir`.
pub fn write_cohort_dir(cohort: &Cohort, dir: &Path) -> Result<CohortManifest, DatagenError> {
    fs::create_dir_all(dir.join("samples"))?;
    fs::create_dir_all(dir.join("positions"))?;

    let references: Vec<_> = cohort.genes.iter().map(|g| g.reference.clone()).collect();
    fs::write(
        dir.join("reference.fasta"),
        write_fasta(&references, LINE_WIDTH),
    )?;
    for gene in &cohort.genes {
        fs::write(
            positions_path(dir, gene.reference.id()),
            positions_text(gene),
        )?;
    }

    let mut samples = Vec::with_capacity(cohort.len());
    for i in 0..cohort.len() {
        let sample = cohort.sample(i);
        let file = format!("{}.fasta", sample.sample_id);
        fs::write(
            dir.join("samples").join(&file),
            write_fasta(&sample.genes, LINE_WIDTH),
        )?;
        samples.push(ManifestSample {
            id: sample.sample_id,
            label: sample.label,
            file,
        });
    }

    let manifest = CohortManifest {
        params: Some(cohort.params.clone()),
        genes: references
            .iter()
            .map(|r| GeneEntry {
                id: r.id().to_string(),
                length: r.len(),
            })
            .collect(),
        samples,
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| DatagenError::Store(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

/// Rebuilds a generated cohort from disk, recovering carriers by comparing
/// each sample with the reference at every listed position.
pub fn load_cohort_dir(dir: &Path) -> Result<Cohort, DatagenError> {
    let manifest = CohortManifest::load(dir)?;
    let params = manifest
        .params
        .clone()
        .ok_or_else(|| DatagenError::Store("manifest has no generating parameters".into()))?;
    let references = parse_fasta(&fs::read_to_string(dir.join("reference.fasta"))?)?;

    let mut genes = Vec::with_capacity(references.len());
    for reference in references {
        let (positions, patient_pathogenic) =
            parse_positions(&fs::read_to_string(positions_path(dir, reference.id()))?)?;
        let mut gene = GeneVariants {
            reference,
            positions,
            patient_pathogenic,
            sites: Vec::new(),
        };
        let listed = gene.listed();
        if let Some(&(p, _, _)) = listed
            .iter()
            .find(|&&(p, _, _)| p == 0 || p > gene.reference.len())
        {
            return Err(DatagenError::Store(format!(
                "gene '{}': position {p} out of range",
                gene.reference.id()
            )));
        }
        gene.sites = listed
            .into_iter()
            .map(|(position, kind, group)| VariantSite {
                position,
                kind,
                alt: gene.reference.bases()[position - 1],
                group,
                carriers: Vec::new(),
            })
            .collect();
        genes.push(gene);
    }

    for index in 0..manifest.samples.len() {
        let sample = manifest.read_sample(dir, index)?;
        for (gene, seq) in genes.iter_mut().zip(&sample.genes) {
            if seq.len() != gene.reference.len() {
                return Err(DatagenError::Store(format!(
                    "sample '{}' gene '{}' has length {} (reference {})",
                    sample.sample_id,
                    seq.id(),
                    seq.len(),
                    gene.reference.len()
                )));
            }
            for site in &mut gene.sites {
                if site.group.is_some_and(|g| g != sample.label) {
                    continue;
                }
                let base = seq.bases()[site.position - 1];
                if base == gene.reference.bases()[site.position - 1] {
                    continue;
                }
                if site.carriers.is_empty() {
                    site.alt = base;
                } else if site.alt != base {
                    return Err(DatagenError::Store(format!(
                        "gene '{}' position {}: more than one alternate base",
                        gene.reference.id(),
                        site.position
                    )));
                }
                site.carriers.push(index as u32);
            }
        }
    }

    let samples = manifest
        .samples
        .into_iter()
        .map(|s| SampleInfo {
            id: s.id,
            label: s.label,
        })
        .collect();
    Ok(Cohort {
        params,
        samples,
        genes,
    })
}
