# Regenerates the golden upgrade files in this directory.
import math, os, random

def eta(p): return 0.0 if p==0 else -p*math.log(p)
def part(mu):
    b=[0.0]
    while b[-1]<1:
        x=b[-1]; c=min(x+1/mu,1.0)
        if abs(eta(c)-eta(x))<=1/mu: b.append(c); continue
        lo,hi=x,c
        while True:
            m=(lo+hi)/2
            if m<=lo or m>=hi: break
            if abs(eta(m)-eta(x))<=1/mu: lo=m
            else: hi=m
        b.append(lo)
    return b
def reg(b,x):
    M=len(b)-1
    for i in range(M):
        if b[i]<=x<b[i+1]: return i+1
    return M
def sr(W,P):
    H=sum(eta(p) for p in P); s=0
    for row in W:
        py=sum(P[x]*row[x] for x in range(len(P)))
        if py==0: continue
        s+=py*sum(eta(P[x]*row[x]/py) for x in range(len(P)))
    return H-s
def upgrade(W,P,mu):
    q=len(P); b=part(mu)
    app=[]
    for row in W:
        py=math.fsum(P[x]*row[x] for x in range(q))
        app.append([P[x]*row[x]/py for x in range(q)])
    bins={}
    for y,a in enumerate(app):
        bins.setdefault(tuple(reg(b,p) for p in a),[]).append(y)
    out=[]; alpha={}
    for key in sorted(bins):
        mem=bins[key]
        best=[max(app[y][x] for y in mem) for x in range(q)]
        xs=max(range(q), key=lambda x:(best[x],-x))
        psi=[min(app[y][x] for y in mem) for x in range(q)]
        psi[xs]=1-math.fsum(psi[x] for x in range(q) if x!=xs)
        for y in mem:
            g=min(app[y][xs]/psi[xs],1.0)
            for x in range(q):
                alpha[(y,x)] = 1.0 if x==xs or app[y][x]==0 else min(psi[x]/app[y][x]*g,1.0)
        out.append([math.fsum(alpha[(y,x)]*W[y][x] for y in mem) for x in range(q)])
    eps=[]
    for x in range(q):
        e=math.fsum((1-alpha[(y,x)])*W[y][x] for y in range(len(W)))
        eps.append(0.0 if e<1e-15 else e)
    labels=['z%d'%k for k in range(len(out))]
    for x in range(q):
        if eps[x]>0:
            out.append([eps[x] if v==x else 0.0 for v in range(q)]); labels.append('k%d'%x)
    return labels,out,eps,len(bins)
def write_mac(path,users,alph,P,labels,W,extra=()):
    with open(path,'w') as f:
        for e in extra: f.write('# %s\n'%e)
        f.write('MAC\nusers %d\nalphabet %d\noutputs %d\n'%(users,alph,len(W)))
        f.write('prior '+' '.join(repr(p) for p in P)+'\n')
        for l,row in zip(labels,W): f.write('letter %s '%l+' '.join(repr(v) for v in row)+'\n')
def rand_channel(rng,q,n):
    cols=[[rng.random()**2 for _ in range(n)] for _ in range(q)]
    cols=[[v/sum(c) for v in c] for c in cols]
    return [[cols[x][y] for x in range(q)] for y in range(n)]
def case(name,seed,users,alph,n,mu,P=None):
    rng=random.Random(seed); q=alph**users
    W=rand_channel(rng,q,n)
    if P is None:
        P=[rng.random()+0.5 for _ in range(q)]; s=sum(P); P=[p/s for p in P]
    # round trip through text so both sides read identical inputs
    labels=['y%d'%i for i in range(n)]
    d=os.path.dirname(os.path.abspath(__file__))+'/'
    write_mac(d+name+'.in.mac',users,alph,P,labels,W)
    L,Q,eps,nb=upgrade(W,P,mu)
    write_mac(d+name+'.out.mac',users,alph,P,L,Q)
    with open(d+name+'.expected','w') as f:
        f.write('mu %r\nbins %d\nrate_original %r\nrate_upgraded %r\nepsilons %s\n'%(mu,nb,sr(W,P),sr(Q,P),' '.join(repr(e) for e in eps)))
    print(name, 'letters',n,'bins',nb,'gap',sr(Q,P)-sr(W,P),'eps',eps)
case('binary_mu5',11,1,2,24,5.0,[0.5,0.5])
case('ternary_mu8',12,1,3,40,8.0)
case('two_user_mu12',13,2,2,600,12.0)
