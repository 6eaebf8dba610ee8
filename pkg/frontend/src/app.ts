import { ApiError } from './api.js';
import type { ApiClient } from './api.js';
import { EditBuffer } from './debounce.js';
import { AvatarDisplay } from './flash.js';
import { openEventStream } from './sse.js';
import type { StreamHandle } from './sse.js';
import { SessionStore } from './store.js';
import { PERSONA_IDS } from './types.js';
import type { Affect, PersonaId, ServerEvent, SessionView } from './types.js';
import { AvatarPanel } from './ui/avatarPanel.js';
import { CommentStack } from './ui/commentStack.js';
import { DocumentView } from './ui/documentView.js';
import { TechniqueTags } from './ui/techniqueTags.js';

export interface AppOptions {
  /** Override event-stream wiring; return null to run without one. */
  connectStream?: (store: SessionStore) => StreamHandle | null;
}

export interface App {
  root: HTMLDivElement;
  store: SessionStore;
  avatars: AvatarDisplay;
  documentView: DocumentView;
  editBuffer: EditBuffer;
  dispose(): void;
}

/** Assemble the workbench under `mount`, seeded with a fetched session. */
export function createApp(
  mount: HTMLElement,
  api: ApiClient,
  session: SessionView,
  options: AppOptions = {},
): App {
  const doc = mount.ownerDocument;
  const store = new SessionStore();
  const sessionId = session.id;

  const root = doc.createElement('div');
  root.className = 'rt-app';
  const main = doc.createElement('div');
  main.className = 'rt-main';
  const side = doc.createElement('div');
  side.className = 'rt-side';
  const noticesBox = doc.createElement('ul');
  noticesBox.className = 'rt-notices';

  const panels = new Map<PersonaId, AvatarPanel>();
  const stacks = new Map<PersonaId, CommentStack>();

  const avatars = new AvatarDisplay((personaId) => {
    panels.get(personaId as PersonaId)?.update(avatars.displayed(personaId));
  });

  const fail = (err: unknown): void => {
    if (err instanceof ApiError) {
      if (err.code === 'version_mismatch') {
        void resync();
        return;
      }
      if (err.code === 'stale_proposal') {
        store.addNotice('That revision is no longer available; the passage changed.');
        return;
      }
      store.addNotice(`${err.code}: ${err.message}`);
    } else {
      store.addNotice(String(err));
    }
  };

  async function resync(): Promise<void> {
    try {
      const fresh = await api.getSession(sessionId);
      store.seed(fresh);
      documentView.syncDraft(fresh.document.text);
    } catch (err) {
      fail(err);
    }
  }

  const call = (op: string, action: () => Promise<unknown>): void => {
    store.markPending(op);
    action()
      .catch(fail)
      .finally(() => store.clearPending(op));
  };

  const editBuffer = new EditBuffer(
    (edit) => call('edit', () => api.postEdit(sessionId, edit)),
    () => ({
      confirmed: store.session?.document.text ?? '',
      draft: documentView.textarea.value,
      version: store.session?.document.version ?? 0,
    }),
  );

  // Structural actions land on the confirmed document, so any draft
  // keystrokes must be flushed ahead of them.
  const flushThen = (op: string, action: () => Promise<unknown>): void => {
    editBuffer.flush();
    call(op, action);
  };

  const documentView = new DocumentView(doc, {
    onInput: () => editBuffer.noteInput(),
    onRequestComment: (personaId, start, end) =>
      flushThen('comment', () => api.requestComment(sessionId, personaId, start, end)),
    onHighlightClick: (highlightId) =>
      flushThen('revision', () => api.requestRevision(sessionId, highlightId)),
    onProposalDoubleClick: (proposalId) =>
      flushThen('adopt', () => api.adoptProposal(sessionId, proposalId)),
  });

  const tags = new TechniqueTags(doc, {
    onSelect: (suggestionId) =>
      flushThen('select', () => api.selectSuggestion(sessionId, suggestionId)),
  });

  for (const personaId of PERSONA_IDS) {
    const holder = doc.createElement('div');
    holder.className = 'rt-persona';
    holder.dataset.persona = personaId;
    const stack = new CommentStack(doc, personaId, {
      onDecide: (commentId, decision) =>
        flushThen('decision', () => api.decideComment(sessionId, commentId, decision)),
      onHoverComment: (pid, affect: Affect | null) => avatars.setHover(pid, affect),
    });
    const panel = new AvatarPanel(doc, personaId, (pid, affect) => api.avatarUrl(pid, affect));
    stacks.set(personaId, stack);
    panels.set(personaId, panel);
    holder.append(stack.element, panel.element);
    side.appendChild(holder);
  }

  main.append(documentView.shell, tags.element, noticesBox);
  root.append(main, side);
  mount.appendChild(root);

  function renderNotices(): void {
    noticesBox.textContent = '';
    for (const notice of store.notices.slice(-5)) {
      const item = doc.createElement('li');
      item.textContent = notice;
      noticesBox.appendChild(item);
    }
  }

  function renderAll(): void {
    const current = store.session;
    if (!current) return;
    documentView.render(current);
    for (const stack of stacks.values()) stack.render(current);
    tags.render(current);
    renderNotices();
    root.classList.toggle('rt-busy', store.pendingOps.size > 0);
  }

  const DOC_EVENTS = new Set(['session_created', 'edit_applied', 'revision_adopted']);

  const unsubscribe = store.subscribe((_state, event: ServerEvent | null) => {
    if (event?.kind === 'persona_flash') {
      const p = event.payload as { persona_id?: string; affect?: Affect };
      if (p.persona_id && p.affect) avatars.flash(p.persona_id, p.affect);
    }
    // The draft follows confirmed document changes, but never while the
    // writer is mid-keystroke with an unflushed diff of their own.
    if (event && DOC_EVENTS.has(event.kind) && !editBuffer.pending) {
      documentView.syncDraft(store.session?.document.text ?? '');
    }
    renderAll();
  });

  store.onGap = () => void resync();
  store.seed(session);
  documentView.syncDraft(session.document.text);

  const connect = options.connectStream
    ? options.connectStream
    : (s: SessionStore) =>
        openEventStream(
          (fromSeq) => api.eventStreamUrl(sessionId, fromSeq),
          s.lastSeq,
          (event) => s.applyEvent(event),
        );
  const stream = connect(store);

  return {
    root,
    store,
    avatars,
    documentView,
    editBuffer,
    dispose() {
      stream?.stop();
      unsubscribe();
      avatars.dispose();
      editBuffer.dispose();
      root.remove();
    },
  };
}
