/** Typed client for the meltpool prediction API. */

export interface MaterialInfo {
  name: string;
  rho: number | null;
  cp: number | null;
  k: number | null;
  tm: number | null;
  has_thermal: boolean;
}

export interface ModelInfo {
  name: string;
  kind: string;
  target: string;
  features: string[];
}

export interface RosenthalBlock {
  depth_um: number;
  width_um: number;
  length_um: number;
}

export interface PredictRequest {
  model: string;
  process: string;
  material: string;
  power_w: number;
  velocity_m_s: number;
  beam_diameter_um?: number;
  layer_thickness_um?: number;
  hatch_spacing_um?: number;
}

export interface PredictResponse {
  model: string;
  depth_um?: number;
  width_um?: number;
  length_um?: number;
  class_probs?: Record<string, number>;
  rosenthal: RosenthalBlock | null;
}

export interface ProcessMapRequest {
  model: string;
  material: string;
  p_range: [number, number];
  v_range: [number, number];
  resolution: number;
  fixed: {
    process?: string;
    beam_diameter_um?: number;
    layer_thickness_um?: number;
    hatch_spacing_um?: number;
  };
}

export interface ProcessMapResponse {
  grid: number[][];
  p_axis: number[];
  v_axis: number[];
  classes: string[];
  material: string;
}

export interface ApiError {
  error: string;
  fields?: string[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(res: Response): Promise<T> {
  const body = await res.json();
  if (!res.ok) {
    const err = body as ApiError;
    throw new Error(err.error ?? `request failed with status ${res.status}`);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private post(path: string, payload: unknown): Promise<Response> {
    return this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async materials(): Promise<MaterialInfo[]> {
    return asJson(await this.fetchImpl(this.baseUrl + "/materials"));
  }

  async models(): Promise<ModelInfo[]> {
    return asJson(await this.fetchImpl(this.baseUrl + "/models"));
  }

  async predict(req: PredictRequest): Promise<PredictResponse> {
    return asJson(await this.post("/predict", req));
  }

  async processmap(req: ProcessMapRequest): Promise<ProcessMapResponse> {
    return asJson(await this.post("/processmap", req));
  }
}
