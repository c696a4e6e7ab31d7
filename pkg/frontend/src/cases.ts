// GENERATED by scripts/gen-cases.mjs from the bundled showcase cases. Do not edit.
import type { CaseDocument } from './types.js'

export const FIXTURE_CASES: Record<string, CaseDocument> = {
  "artifact": {
    "case_id": "artifact-cfp-01",
    "images": [
      {
        "image_id": "artifact_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://artifact_cfp_01"
      }
    ],
    "query": "What is the examination result?"
  },
  "crvo": {
    "case_id": "crvo-uwf-01",
    "images": [
      {
        "image_id": "crvo_uwf_01",
        "uri": "fixture://crvo_uwf_01"
      }
    ],
    "query": "What is the potential diagnosis? (provide me the modality, laterality and diagnosis)"
  },
  "cvd": {
    "case_id": "cvd-cfp-01",
    "images": [
      {
        "image_id": "cvd_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://cvd_cfp_01"
      }
    ],
    "query": "Please quantify the retinal vessels and predict the risk of developing cardiovascular disease within the next 5 years."
  },
  "drusen": {
    "case_id": "drusen-cfp-01",
    "images": [
      {
        "image_id": "drusen_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://drusen_cfp_01"
      }
    ],
    "query": "Count, label, and measure the diameter of all the drusen in the image."
  },
  "ffa-laser": {
    "case_id": "laser-ffa-01",
    "images": [
      {
        "image_id": "laser_ffa_01",
        "modality_hint": "FFA",
        "uri": "fixture://laser_ffa_01"
      }
    ],
    "query": "Can you create a medical assessment report from this image and label the lesions?"
  },
  "mh": {
    "case_id": "mh-oct-01",
    "images": [
      {
        "image_id": "mh_oct_01",
        "laterality_hint": "OD",
        "modality_hint": "OCT",
        "uri": "fixture://mh_oct_01"
      }
    ],
    "query": "Is there any abnormality? provide me the diagnosis and label the lesions"
  },
  "misleading": {
    "case_id": "misleading-cfp-01",
    "images": [
      {
        "image_id": "misleading_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://misleading_cfp_01"
      }
    ],
    "query": "I have macular disease. What should I do?"
  },
  "myopia": {
    "case_id": "myopia-cfp-01",
    "images": [
      {
        "image_id": "myopia_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://myopia_cfp_01"
      }
    ],
    "query": "What is the diagnosis of this image and what is its eyeball shape look like (generate the 3D eye shape)?"
  },
  "pdr": {
    "case_id": "pdr-cfp-01",
    "images": [
      {
        "image_id": "pdr_cfp_01",
        "modality_hint": "CFP",
        "uri": "fixture://pdr_cfp_01"
      }
    ],
    "query": "Give me the diagnosis and explanation based on this image and generate the corresponding FFA image with labeled lesions."
  }
}
