import { ApiClient, ApiError } from "./api.js";
import type {
  CurvePoint,
  LabelChoice,
  Metrics,
  QueryInstance,
} from "./types.js";
import { choiceToLabel } from "./types.js";

export interface ConsoleState {
  sessionId: string;
  status: string;
  strategy: string;
  pending: QueryInstance[];
  curve: CurvePoint[];
  metrics: Metrics | null;
  labelInFlight: boolean;
  connectionLost: boolean;
  sessionMissing: boolean;
  lastError: string | null;
}

type Listener = (state: ConsoleState) => void;

/** Dashboard state machine: polls the service, serves label actions, and
 * never mutates session state except through POST /label. */
export class SessionConsole {
  private state: ConsoleState;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    sessionId: string,
    private readonly onChange: Listener = () => {},
  ) {
    this.state = {
      sessionId,
      status: "unknown",
      strategy: "",
      pending: [],
      curve: [],
      metrics: null,
      labelInFlight: false,
      connectionLost: false,
      sessionMissing: false,
      lastError: null,
    };
  }

  snapshot(): ConsoleState {
    return { ...this.state, pending: [...this.state.pending], curve: [...this.state.curve] };
  }

  private emit(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.snapshot());
  }

  get stopped(): boolean {
    return this.state.status.startsWith("stopped_");
  }

  /** One poll cycle: metrics, curve, and (while active) the pending query. */
  async refresh(): Promise<void> {
    const { sessionId } = this.state;
    try {
      const metrics = await this.api.getMetrics(sessionId);
      const curve = await this.api.getCurve(sessionId);
      let pending = this.state.pending;
      if (metrics.status.startsWith("stopped_")) {
        pending = [];
      } else {
        pending = (await this.api.getQuery(sessionId)).instances;
      }
      this.emit({
        status: metrics.status,
        strategy: metrics.strategy,
        metrics,
        curve,
        pending,
        connectionLost: false,
        sessionMissing: false,
        lastError: null,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 404) {
          this.emit({ sessionMissing: true });
          return;
        }
        if (err.status === 409) {
          // stopped between the metrics and query calls
          const metrics = await this.api.getMetrics(sessionId);
          const curve = await this.api.getCurve(sessionId);
          this.emit({ status: metrics.status, metrics, curve, pending: [] });
          return;
        }
        this.emit({ lastError: `unexpected API response ${err.status}` });
        return;
      }
      // network failure: keep all data, show the retry indicator
      this.emit({ connectionLost: true });
    }
  }

  /** Label the card for `instanceId`. Guarded against double submission;
   * a 409 (labeled elsewhere) refreshes the pending query instead. */
  async label(instanceId: number, choice: LabelChoice): Promise<void> {
    if (this.state.labelInFlight) {
      return;
    }
    if (!this.state.pending.some((card) => card.id === instanceId)) {
      return;
    }
    this.emit({ labelInFlight: true });
    try {
      const response = await this.api.postLabel(
        this.state.sessionId,
        instanceId,
        choiceToLabel(choice),
      );
      const pending = this.state.pending.filter((card) => card.id !== instanceId);
      const curve = response.point
        ? [...this.state.curve, response.point]
        : this.state.curve;
      this.emit({
        status: response.status,
        pending,
        curve,
        labelInFlight: false,
        lastError: null,
      });
      if (pending.length === 0 && !this.stopped) {
        await this.refresh();
      }
    } catch (err) {
      this.emit({ labelInFlight: false });
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        return;
      }
      if (err instanceof ApiError && err.status === 400) {
        this.emit({ lastError: "label rejected by the server" });
        return;
      }
      this.emit({ connectionLost: true });
    }
  }

  /** Keyboard shortcuts: a = attack, n = normal, on the first pending card. */
  async handleKey(key: string): Promise<void> {
    const card = this.state.pending[0];
    if (!card) {
      return;
    }
    if (key === "a") {
      await this.label(card.id, "attack");
    } else if (key === "n") {
      await this.label(card.id, "normal");
    }
  }

  startPolling(intervalMs = 1000): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      if (this.stopped || this.state.sessionMissing) {
        this.stopPolling();
        return;
      }
      void this.refresh();
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
