/**
 * Registration configuration form model. Client-side validation mirrors
 * the server's invariants field for field, so the dialog can reject bad
 * input before a round-trip (the server still re-validates).
 */

export const ESTIMATOR_METHODS = ["ransac", "lo-ransac", "magsac-simplified"] as const;

export interface EstimatorConfig {
  method: string;
  tau_reproj: number;
  max_iters: number;
  confidence: number;
  seed: number;
}

export interface RegistrationConfig {
  patch_size: number;
  n_max: number;
  tau_kp: number;
  resize_policy: string;
  estimator: EstimatorConfig;
  backend: string;
  visualize_matches: boolean;
}

export interface FieldError {
  field: string;
  message: string;
}

export function defaultConfig(): RegistrationConfig {
  return {
    patch_size: 1024,
    n_max: 8000,
    tau_kp: 0,
    resize_policy: "same-width",
    estimator: {
      method: "ransac",
      tau_reproj: 5,
      max_iters: 10000,
      confidence: 0.995,
      seed: 0,
    },
    backend: "junction",
    visualize_matches: false,
  };
}

export function validateResizePolicy(policy: string): string | null {
  if (policy === "same-width" || policy === "none") return null;
  if (policy.startsWith("height:")) {
    const h = Number(policy.slice("height:".length));
    if (!Number.isInteger(h) || h <= 0) return "height must be a positive integer";
    return null;
  }
  return `unknown policy ${JSON.stringify(policy)}`;
}

export function validateConfig(cfg: RegistrationConfig): FieldError[] {
  const errors: FieldError[] = [];
  const push = (field: string, message: string) => errors.push({ field, message });

  if (!Number.isInteger(cfg.patch_size) || cfg.patch_size < 64) {
    push("patch_size", "must be an integer >= 64");
  }
  if (!Number.isInteger(cfg.n_max) || cfg.n_max < 4) {
    push("n_max", "must be an integer >= 4");
  }
  if (!(cfg.tau_kp >= 0 && cfg.tau_kp < 1)) {
    push("tau_kp", "must be in [0, 1)");
  }
  const policyError = validateResizePolicy(cfg.resize_policy);
  if (policyError) push("resize_policy", policyError);
  if (!cfg.backend) push("backend", "must be a backend name");

  const est = cfg.estimator;
  if (!ESTIMATOR_METHODS.includes(est.method as never)) {
    push("estimator.method", `expected one of ${ESTIMATOR_METHODS.join(", ")}`);
  }
  if (!(est.tau_reproj > 0)) push("estimator.tau_reproj", "must be > 0");
  if (!(est.confidence > 0 && est.confidence < 1)) {
    push("estimator.confidence", "must be in (0, 1)");
  }
  if (!Number.isInteger(est.max_iters) || est.max_iters < 1) {
    push("estimator.max_iters", "must be an integer >= 1");
  }
  if (!Number.isInteger(est.seed)) push("estimator.seed", "must be an integer");
  return errors;
}
