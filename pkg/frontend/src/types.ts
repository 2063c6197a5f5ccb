/** Shapes served by the review service API. */

export type Severity = "red" | "yellow";

export interface FlagInfo {
  code: string;
  severity: Severity;
  detail: string;
  row: number | null;
}

export interface RecordRow {
  row: number;
  label: string;
  raw_value: string;
  amount: string;
  side: string;
  flags: FlagInfo[];
}

export interface IdentityInfo {
  status: "balanced" | "mismatch";
  difference: string;
  asset_sum: string;
  liability_sum: string;
  asset_total: string | null;
  liability_total: string | null;
}

export interface ReviewBundle {
  page_id: number;
  version: number;
  raw_image_url: string;
  processed_image_url: string | null;
  header: string;
  records: RecordRow[];
  sheet_flags: FlagInfo[];
  identity: IdentityInfo;
  reviewed: boolean;
}

export interface PageSummary {
  page_id: number;
  red: number;
  yellow: number;
  reviewed: boolean;
  has_records: boolean;
  version: number;
}

export interface CorrectionEdit {
  row_id: number;
  field: "label" | "amount";
  value: string;
}
