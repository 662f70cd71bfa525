/**
 * Typed client for the registration service. All state lives on the
 * server; this module only shapes requests and polls job records.
 */

import type { RegistrationConfig } from "./config-form";

export interface UploadedImage {
  image_id: string;
  width: number;
  height: number;
}

export interface JobRecord {
  job_id: string;
  state: "pending" | "running" | "done" | "failed";
  stage?: string | null;
  message?: string | null;
  config: RegistrationConfig;
  timings_ms: Record<string, number>;
  result?: {
    homography_original: number[];
    inlier_count: number;
    match_count: number;
    [key: string]: unknown;
  } | null;
  assets: string[];
}

export interface PersistedConfig {
  defaults: boolean;
  config: RegistrationConfig;
}

async function expectOk(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* keep statusText */
    }
    throw new Error(`${resp.status}: ${detail}`);
  }
  return resp;
}

export async function uploadImage(file: File | Blob, name = "image.png"): Promise<UploadedImage> {
  const form = new FormData();
  form.append("file", file, name);
  const resp = await expectOk(await fetch("/api/images", { method: "POST", body: form }));
  return resp.json();
}

export async function getConfig(): Promise<PersistedConfig> {
  const resp = await expectOk(await fetch("/api/config"));
  return resp.json();
}

export async function putConfig(config: RegistrationConfig): Promise<PersistedConfig> {
  const resp = await expectOk(
    await fetch("/api/config", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ config }),
    })
  );
  return resp.json();
}

export async function resetConfig(): Promise<PersistedConfig> {
  const resp = await expectOk(await fetch("/api/config/reset", { method: "POST" }));
  return resp.json();
}

export async function createRegistration(
  referenceId: string,
  movingId: string,
  config?: RegistrationConfig
): Promise<string> {
  const resp = await expectOk(
    await fetch("/api/registrations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        reference_id: referenceId,
        moving_id: movingId,
        ...(config ? { config } : {}),
      }),
    })
  );
  return (await resp.json()).job_id;
}

export async function getJob(jobId: string): Promise<JobRecord> {
  const resp = await expectOk(await fetch(`/api/registrations/${jobId}`));
  return resp.json();
}

/** Yields job records every `intervalMs` until the job settles. */
export async function* pollJob(
  jobId: string,
  intervalMs = 500
): AsyncGenerator<JobRecord> {
  for (;;) {
    const record = await getJob(jobId);
    yield record;
    if (record.state === "done" || record.state === "failed") return;
    await new Promise((r) => setTimeout(r, intervalMs));
  }
}

export function assetUrl(jobId: string, asset: string): string {
  return `/api/registrations/${jobId}/assets/${asset}`;
}

export function blendUrl(jobId: string, alpha: number): string {
  return `/api/registrations/${jobId}/blend?alpha=${alpha}`;
}

export function exportUrl(jobId: string): string {
  return `/api/registrations/${jobId}/export`;
}
