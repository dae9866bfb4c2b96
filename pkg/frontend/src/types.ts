export interface StreamEvent {
  type: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface TelemetrySample {
  t: number;
  east: number;
  north: number;
  up: number;
  lat: number;
  lon: number;
  alt: number;
  phase: string;
}

export interface AttemptEntry {
  attempt: number;
  completionTokens: number;
  latencyS: number;
  valid: boolean;
}

export interface TranscriptEntry {
  prompt: string;
  attempts: AttemptEntry[];
  badge: string | null; // Successful / PartiallyCorrect / Unsuccessful
  pending: boolean;
}

export interface GroundUserMarker {
  east: number;
  north: number;
  traffic: number; // Mbit/s, scales marker size
}

export interface ObstacleMarker {
  east: number;
  north: number;
  radius: number;
  height: number;
}

export interface Overlays {
  groundUsers: GroundUserMarker[];
  obstacles: ObstacleMarker[];
  waypoints: { east: number; north: number }[];
}

export type ConnectionStatus = "Connecting" | "Connected" | "Reconnecting" | "Closed";

export interface ViewState {
  sessionId: number | null;
  status: ConnectionStatus;
  transcript: TranscriptEntry[];
  latest: TelemetrySample | null;
  trajectory: TelemetrySample[];
  overlays: Overlays;
  phase: string;
  lastSeq: number;
}
